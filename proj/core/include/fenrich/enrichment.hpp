#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fenrich/clustering.hpp"
#include "fenrich/corpus.hpp"
#include "fenrich/graph.hpp"
#include "fenrich/signing.hpp"
#include "fenrich/types.hpp"

namespace fenrich::enrichment {

// How two clusters x, y are judged compatible.
//
// kSymmetric: B[x,y] is required when y is positive and B[y,x] when x is
// positive (both directions for two positive clusters).
//
// kStrictAlgorithm1: one-directional, as in the precomputation algorithm;
// base clusters precede expansion clusters, expansion clusters are ordered
// by id, and only B[earlier, later] is checked.
enum class Compatibility { kSymmetric, kStrictAlgorithm1 };

enum class Enumerator {
  kBronKerbosch,  // pivoted Bron-Kerbosch over candidate bitmasks
  kExpandPrune,   // recursive expansion in candidate order, then subset pruning
};

inline constexpr std::size_t kMaxCandidateBound = 64;

struct EnumerationOptions {
  Compatibility compatibility = Compatibility::kSymmetric;
  Enumerator enumerator = Enumerator::kBronKerbosch;
  // Enumeration is refused above this many candidates (at most 64).
  std::size_t max_candidates = kMaxCandidateBound;
};

// Non-empty, sorted, duplicate-free cluster ids of one report's findings.
class FindingSet {
 public:
  // Sorts and deduplicates; throws DomainError if empty or holding noise.
  explicit FindingSet(ClusterSet clusters);

  const ClusterSet& clusters() const noexcept { return clusters_; }
  bool contains(ClusterId c) const;
  std::size_t size() const noexcept { return clusters_.size(); }

  auto operator<=>(const FindingSet&) const = default;

 private:
  ClusterSet clusters_;
};

// Sorted set of clusters added to a report.
using ExpansionSet = ClusterSet;

// Clusters j with B[c,j] = 1 for every c in F, minus F.
ClusterSet candidate_neighborhood(const FindingSet& findings, const graph::AddabilityMatrix& addability);

// Compatibility of x and y; under kStrictAlgorithm1, x is the earlier one.
bool compatible(ClusterId x, ClusterId y, const graph::AddabilityMatrix& addability, const signing::SignMap& signs,
                Compatibility mode = Compatibility::kSymmetric);

// (F, E) is valid iff F and E are disjoint, every cluster in E is positive
// and every pair in F u E other than pairs inside F is compatible. Throws
// DomainError for ids outside [0, K).
bool is_valid_enrichment(const FindingSet& findings, const ExpansionSet& expansion,
                         const graph::AddabilityMatrix& addability, const signing::SignMap& signs,
                         Compatibility mode = Compatibility::kSymmetric);

// Valid, and no further cluster c can be added with (F, E u {c}) valid.
bool is_largest_valid_enrichment(const FindingSet& findings, const ExpansionSet& expansion,
                                 const graph::AddabilityMatrix& addability, const signing::SignMap& signs,
                                 Compatibility mode = Compatibility::kSymmetric);

// All largest valid enrichments of F, sorted lexicographically. Returns a
// single empty expansion when nothing can be added. Throws DomainError
// ("candidate explosion") above options.max_candidates candidates.
std::vector<ExpansionSet> enumerate_largest(const FindingSet& findings, const graph::AddabilityMatrix& addability,
                                            const signing::SignMap& signs, const EnumerationOptions& options = {});

class EnrichmentCatalog {
 public:
  using Entries = std::map<FindingSet, std::vector<ExpansionSet>>;

  EnrichmentCatalog() = default;
  explicit EnrichmentCatalog(Entries entries) : entries_(std::move(entries)) {}

  const Entries& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  // Throws DomainError if F has no entry.
  const std::vector<ExpansionSet>& at(const FindingSet& findings) const;
  bool contains(const FindingSet& findings) const { return entries_.count(findings) != 0; }

  bool operator==(const EnrichmentCatalog&) const = default;

 private:
  Entries entries_;
};

// One entry per distinct non-empty report cluster set. Enumeration errors
// are rethrown with the ids of the affected reports.
EnrichmentCatalog build_catalog(const std::vector<corpus::Report>& reports,
                                const clustering::ClusterAssignment& assignment,
                                const graph::AddabilityMatrix& addability, const signing::SignMap& signs,
                                const EnumerationOptions& options = {});

// Uniform draw from the entry of F; deterministic in (seed, draw_index).
ExpansionSet sample_enrichment(const EnrichmentCatalog& catalog, const FindingSet& findings, std::uint64_t seed,
                               std::uint64_t draw_index);

// The original findings text (given a terminal period if it lacks one),
// then one uniformly drawn member of each expansion cluster in ascending
// cluster order, each followed by a period. An empty expansion returns the
// findings text unchanged.
std::string render_enriched(const corpus::Report& report, const ExpansionSet& expansion,
                            const clustering::ClusterAssignment& assignment, const corpus::SentenceTable& table,
                            std::uint64_t seed);

// catalog.jsonl: {"finding_set": [ids], "expansions": [[ids], ...]}.
void save_catalog(const EnrichmentCatalog& catalog, const std::filesystem::path& path);
EnrichmentCatalog load_catalog(const std::filesystem::path& path);

}  // namespace fenrich::enrichment
