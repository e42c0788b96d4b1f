#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fenrich/clustering.hpp"
#include "fenrich/corpus.hpp"
#include "fenrich/signing.hpp"
#include "fenrich/types.hpp"

namespace fenrich::graph {

// Symmetric, zero-diagonal count matrix over K clusters, stored sparsely.
class CooccurrenceMatrix {
 public:
  CooccurrenceMatrix() = default;
  explicit CooccurrenceMatrix(std::size_t num_clusters) : rows_(num_clusters) {}

  std::size_t size() const noexcept { return rows_.size(); }
  std::uint32_t count(ClusterId a, ClusterId b) const;
  const std::map<ClusterId, std::uint32_t>& row(ClusterId a) const { return rows_.at(static_cast<std::size_t>(a)); }
  std::uint64_t row_sum(ClusterId a) const;
  std::uint32_t max_count() const;

  // Increments A[a,b] and A[b,a]; a != b.
  void add_pair(ClusterId a, ClusterId b, std::uint32_t n = 1);

  bool operator==(const CooccurrenceMatrix&) const = default;

 private:
  std::vector<std::map<ClusterId, std::uint32_t>> rows_;
};

// Directed boolean relation; row i lists the j with B[i,j] = 1, ascending.
class AddabilityMatrix {
 public:
  AddabilityMatrix() = default;
  AddabilityMatrix(std::size_t num_clusters, double tau_norm, std::uint32_t tau_count)
      : rows_(num_clusters), tau_norm_(tau_norm), tau_count_(tau_count) {}

  std::size_t size() const noexcept { return rows_.size(); }
  bool at(ClusterId i, ClusterId j) const;
  const std::vector<ClusterId>& row(ClusterId i) const { return rows_.at(static_cast<std::size_t>(i)); }
  std::size_t num_set() const;

  double tau_norm() const noexcept { return tau_norm_; }
  std::uint32_t tau_count() const noexcept { return tau_count_; }

  // Bits must be set in ascending column order within a row.
  void set(ClusterId i, ClusterId j);

  bool operator==(const AddabilityMatrix&) const = default;

 private:
  std::vector<std::vector<ClusterId>> rows_;
  double tau_norm_ = 0.0;
  std::uint32_t tau_count_ = 0;
};

// Deduplicated, sorted non-noise cluster ids of each report's findings.
std::vector<ClusterSet> report_cluster_sets(const std::vector<corpus::Report>& reports,
                                            const clustering::ClusterAssignment& assignment);

// Each report adds one to every unordered pair of distinct clusters in its
// cluster set. Throws DomainError("no co-occurrence signal") when every
// report's cluster set is empty.
CooccurrenceMatrix build_cooccurrence(const std::vector<corpus::Report>& reports,
                                      const clustering::ClusterAssignment& assignment);
CooccurrenceMatrix build_cooccurrence_from_sets(const std::vector<ClusterSet>& sets, std::size_t num_clusters);

// A[i,j] / rowsum(A, i); all-zero rows stay zero.
std::map<ClusterId, double> normalized_row(const CooccurrenceMatrix& counts, ClusterId i);

// B[i,j] = [normalized A[i,j] > tau_norm and A[i,j] > tau_count and sign(j) = +1].
AddabilityMatrix build_addability(const CooccurrenceMatrix& counts, const signing::SignMap& signs, double tau_norm,
                                  std::uint32_t tau_count);

// cooccurrence.jsonl: header {"header": {K, corpus_hash}} then {i, j, count}
// for i < j. addability.jsonl: header {"header": {K, tau_norm, tau_count,
// corpus_hash}} then {i, j} per set bit.
void save_cooccurrence(const CooccurrenceMatrix& counts, const std::filesystem::path& path,
                       const std::string& corpus_hash);
CooccurrenceMatrix load_cooccurrence(const std::filesystem::path& path);
void save_addability(const AddabilityMatrix& bits, const std::filesystem::path& path, const std::string& corpus_hash);
AddabilityMatrix load_addability(const std::filesystem::path& path);

}  // namespace fenrich::graph
