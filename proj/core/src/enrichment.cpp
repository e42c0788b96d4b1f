#include "fenrich/enrichment.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <sstream>

#include <json.hpp>

#include "fenrich/error.hpp"
#include "fenrich/jsonl.hpp"
#include "fenrich/parallel.hpp"
#include "fenrich/random.hpp"

namespace fenrich::enrichment {
namespace {

using nlohmann::json;
using Mask = std::uint64_t;

std::string format_set(const ClusterSet& s) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << '}';
  return os.str();
}

void check_inputs(const graph::AddabilityMatrix& b, const signing::SignMap& signs) {
  if (signs.size() < b.size()) {
    throw DomainError("sign map covers " + std::to_string(signs.size()) + " clusters, addability matrix has " +
                      std::to_string(b.size()));
  }
}

void check_id(ClusterId c, const graph::AddabilityMatrix& b) {
  if (c < 0 || static_cast<std::size_t>(c) >= b.size()) {
    throw DomainError("unknown cluster id " + std::to_string(c) + " (K = " + std::to_string(b.size()) + ")");
  }
}

ClusterSet sorted_unique(ClusterSet s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

ExpansionSet to_set(Mask m, const std::vector<ClusterId>& cand) {
  ExpansionSet e;
  while (m) {
    e.push_back(cand[static_cast<std::size_t>(std::countr_zero(m))]);
    m &= m - 1;
  }
  return e;
}

// Pivoted Bron-Kerbosch; adj[v] never contains v.
void bron_kerbosch(Mask r, Mask p, Mask x, const std::vector<Mask>& adj, std::vector<Mask>& out) {
  if (p == 0 && x == 0) {
    out.push_back(r);
    return;
  }
  int pivot = -1;
  int best = -1;
  for (Mask px = p | x; px; px &= px - 1) {
    const int u = std::countr_zero(px);
    const int deg = std::popcount(p & adj[u]);
    if (deg > best) {
      best = deg;
      pivot = u;
    }
  }
  for (Mask cand = p & ~adj[pivot]; cand; cand &= cand - 1) {
    const int v = std::countr_zero(cand);
    const Mask bit = Mask{1} << v;
    bron_kerbosch(r | bit, p & adj[v], x & adj[v], adj, out);
    p &= ~bit;
    x |= bit;
  }
}

// Grows R only with later candidates compatible with every member; emits R
// when no later candidate fits. Non-maximal emissions are pruned afterwards.
void expand(Mask r, std::size_t start, std::size_t m, const std::vector<Mask>& adj, std::vector<Mask>& out) {
  bool expanded = false;
  for (std::size_t i = start; i < m; ++i) {
    bool ok = true;
    for (Mask rr = r; rr && ok; rr &= rr - 1) ok = (adj[std::countr_zero(rr)] >> i) & 1;
    if (!ok) continue;
    expanded = true;
    expand(r | (Mask{1} << i), i + 1, m, adj, out);
  }
  if (!expanded) out.push_back(r);
}

std::vector<Mask> prune_subsets(std::vector<Mask> sets) {
  std::sort(sets.begin(), sets.end());
  sets.erase(std::unique(sets.begin(), sets.end()), sets.end());
  std::vector<Mask> kept;
  for (Mask a : sets) {
    const bool dominated = std::any_of(sets.begin(), sets.end(), [a](Mask b) { return b != a && (a & ~b) == 0; });
    if (!dominated) kept.push_back(a);
  }
  return kept;
}

}  // namespace

FindingSet::FindingSet(ClusterSet clusters) : clusters_(sorted_unique(std::move(clusters))) {
  if (clusters_.empty()) throw DomainError("finding set must not be empty");
  if (clusters_.front() < 0) throw DomainError("finding set must not contain noise");
}

bool FindingSet::contains(ClusterId c) const { return std::binary_search(clusters_.begin(), clusters_.end(), c); }

ClusterSet candidate_neighborhood(const FindingSet& findings, const graph::AddabilityMatrix& addability) {
  for (auto c : findings.clusters()) check_id(c, addability);
  ClusterSet out = addability.row(findings.clusters().front());
  for (std::size_t i = 1; i < findings.size() && !out.empty(); ++i) {
    const auto& r = addability.row(findings.clusters()[i]);
    ClusterSet next;
    std::set_intersection(out.begin(), out.end(), r.begin(), r.end(), std::back_inserter(next));
    out = std::move(next);
  }
  std::erase_if(out, [&](ClusterId c) { return findings.contains(c); });
  return out;
}

bool compatible(ClusterId x, ClusterId y, const graph::AddabilityMatrix& addability, const signing::SignMap& signs,
                Compatibility mode) {
  if (mode == Compatibility::kStrictAlgorithm1) return addability.at(x, y);
  if (signs.positive(y) && !addability.at(x, y)) return false;
  if (signs.positive(x) && !addability.at(y, x)) return false;
  return true;
}

bool is_valid_enrichment(const FindingSet& findings, const ExpansionSet& expansion,
                         const graph::AddabilityMatrix& addability, const signing::SignMap& signs,
                         Compatibility mode) {
  check_inputs(addability, signs);
  for (auto c : findings.clusters()) check_id(c, addability);
  for (auto c : expansion) check_id(c, addability);
  const ClusterSet e = sorted_unique(expansion);
  if (e.size() != expansion.size()) return false;
  for (auto y : e) {
    if (findings.contains(y) || !signs.positive(y)) return false;
    for (auto x : findings.clusters()) {
      if (!compatible(x, y, addability, signs, mode)) return false;
    }
  }
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (std::size_t j = i + 1; j < e.size(); ++j) {
      if (!compatible(e[i], e[j], addability, signs, mode)) return false;
    }
  }
  return true;
}

bool is_largest_valid_enrichment(const FindingSet& findings, const ExpansionSet& expansion,
                                 const graph::AddabilityMatrix& addability, const signing::SignMap& signs,
                                 Compatibility mode) {
  if (!is_valid_enrichment(findings, expansion, addability, signs, mode)) return false;
  ExpansionSet grown = expansion;
  for (std::size_t c = 0; c < addability.size(); ++c) {
    const auto id = static_cast<ClusterId>(c);
    if (findings.contains(id) || std::find(expansion.begin(), expansion.end(), id) != expansion.end()) continue;
    grown.push_back(id);
    if (is_valid_enrichment(findings, grown, addability, signs, mode)) return false;
    grown.pop_back();
  }
  return true;
}

std::vector<ExpansionSet> enumerate_largest(const FindingSet& findings, const graph::AddabilityMatrix& addability,
                                            const signing::SignMap& signs, const EnumerationOptions& options) {
  check_inputs(addability, signs);
  if (options.max_candidates > kMaxCandidateBound) {
    throw DomainError("max_candidates may not exceed " + std::to_string(kMaxCandidateBound));
  }
  std::vector<ClusterId> cand;
  for (auto p : candidate_neighborhood(findings, addability)) {
    if (is_valid_enrichment(findings, {p}, addability, signs, options.compatibility)) cand.push_back(p);
  }
  if (cand.empty()) return {ExpansionSet{}};
  if (cand.size() > options.max_candidates) {
    throw DomainError("candidate explosion: finding set " + format_set(findings.clusters()) + " has " +
                      std::to_string(cand.size()) + " candidates (bound " + std::to_string(options.max_candidates) +
                      ")");
  }

  const std::size_t m = cand.size();
  std::vector<Mask> adj(m, 0);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      if (compatible(cand[a], cand[b], addability, signs, options.compatibility)) {
        adj[a] |= Mask{1} << b;
        adj[b] |= Mask{1} << a;
      }
    }
  }

  std::vector<Mask> found;
  if (options.enumerator == Enumerator::kBronKerbosch) {
    const Mask all = m == 64 ? ~Mask{0} : (Mask{1} << m) - 1;
    bron_kerbosch(0, all, 0, adj, found);
  } else {
    expand(0, 0, m, adj, found);
    found = prune_subsets(std::move(found));
  }

  std::vector<ExpansionSet> out;
  out.reserve(found.size());
  for (Mask f : found) out.push_back(to_set(f, cand));
  std::sort(out.begin(), out.end());
  return out;
}

const std::vector<ExpansionSet>& EnrichmentCatalog::at(const FindingSet& findings) const {
  auto it = entries_.find(findings);
  if (it == entries_.end()) {
    throw DomainError("finding set " + format_set(findings.clusters()) + " is not in the catalog");
  }
  return it->second;
}

EnrichmentCatalog build_catalog(const std::vector<corpus::Report>& reports,
                                const clustering::ClusterAssignment& assignment,
                                const graph::AddabilityMatrix& addability, const signing::SignMap& signs,
                                const EnumerationOptions& options) {
  const auto sets = graph::report_cluster_sets(reports, assignment);
  std::map<FindingSet, std::vector<std::string>> owners;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (!sets[i].empty()) owners[FindingSet(sets[i])].push_back(reports[i].report_id);
  }
  std::vector<const FindingSet*> keys;
  keys.reserve(owners.size());
  for (const auto& [f, _] : owners) keys.push_back(&f);

  std::vector<std::vector<ExpansionSet>> results(keys.size());
  parallel_for(keys.size(), [&](std::size_t i) {
    try {
      results[i] = enumerate_largest(*keys[i], addability, signs, options);
    } catch (const DomainError& e) {
      const auto& ids = owners.at(*keys[i]);
      std::string who;
      for (std::size_t j = 0; j < ids.size() && j < 5; ++j) who += (j ? ", " : "") + ids[j];
      if (ids.size() > 5) who += ", ... (" + std::to_string(ids.size()) + " reports)";
      throw DomainError(std::string(e.what()) + "; reports: " + who);
    }
  });

  EnrichmentCatalog::Entries entries;
  for (std::size_t i = 0; i < keys.size(); ++i) entries.emplace(*keys[i], std::move(results[i]));
  return EnrichmentCatalog(std::move(entries));
}

ExpansionSet sample_enrichment(const EnrichmentCatalog& catalog, const FindingSet& findings, std::uint64_t seed,
                               std::uint64_t draw_index) {
  const auto& options = catalog.at(findings);
  if (options.empty()) throw DomainError("catalog entry " + format_set(findings.clusters()) + " is empty");
  Rng rng(derive_seed(seed, draw_index));
  return options[rng.uniform_index(options.size())];
}

std::string render_enriched(const corpus::Report& report, const ExpansionSet& expansion,
                            const clustering::ClusterAssignment& assignment, const corpus::SentenceTable& table,
                            std::uint64_t seed) {
  const ClusterSet added = sorted_unique(expansion);
  if (added.empty()) return report.findings_text;

  std::string out(report.findings_text);
  while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
  if (!out.empty() && out.back() != '.' && out.back() != '!' && out.back() != '?') out += '.';
  for (auto c : added) {
    if (c < 0 || static_cast<std::size_t>(c) >= assignment.num_clusters()) {
      throw DomainError("unknown cluster id " + std::to_string(c));
    }
    const auto& members = assignment.members(c);
    if (members.empty()) throw DomainError("cluster " + std::to_string(c) + " has no members");
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    const SentenceId pick = members[rng.uniform_index(members.size())];
    if (pick >= table.size()) throw DomainError("sentence id " + std::to_string(pick) + " out of range");
    if (!out.empty()) out += ' ';
    out += table.text(pick);
    out += '.';
  }
  return out;
}

void save_catalog(const EnrichmentCatalog& catalog, const std::filesystem::path& path) {
  AtomicFileWriter w(path);
  for (const auto& [f, expansions] : catalog.entries()) {
    w.stream() << json{{"finding_set", f.clusters()}, {"expansions", expansions}}.dump() << '\n';
  }
  w.commit();
}

EnrichmentCatalog load_catalog(const std::filesystem::path& path) {
  EnrichmentCatalog::Entries entries;
  for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    try {
      auto rec = json::parse(line);
      FindingSet f(rec.at("finding_set").get<ClusterSet>());
      auto expansions = rec.at("expansions").get<std::vector<ExpansionSet>>();
      if (expansions.empty()) throw DomainError("entry has no expansions");
      if (!entries.emplace(std::move(f), std::move(expansions)).second) throw DomainError("duplicate finding set");
    } catch (const RecordError&) {
      throw;
    } catch (const std::exception& e) {
      throw RecordError(line_no, e.what());
    }
  });
  return EnrichmentCatalog(std::move(entries));
}

}  // namespace fenrich::enrichment
