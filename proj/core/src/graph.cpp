#include "fenrich/graph.hpp"

#include <algorithm>

#include <json.hpp>

#include "fenrich/error.hpp"
#include "fenrich/jsonl.hpp"

namespace fenrich::graph {
namespace {

using nlohmann::json;

void check_id(ClusterId c, std::size_t k) {
  if (c < 0 || static_cast<std::size_t>(c) >= k) {
    throw DomainError("cluster id " + std::to_string(c) + " out of range [0, " + std::to_string(k) + ")");
  }
}

}  // namespace

std::uint32_t CooccurrenceMatrix::count(ClusterId a, ClusterId b) const {
  const auto& r = row(a);
  auto it = r.find(b);
  return it == r.end() ? 0 : it->second;
}

std::uint64_t CooccurrenceMatrix::row_sum(ClusterId a) const {
  std::uint64_t s = 0;
  for (const auto& [_, n] : row(a)) s += n;
  return s;
}

std::uint32_t CooccurrenceMatrix::max_count() const {
  std::uint32_t m = 0;
  for (const auto& r : rows_) {
    for (const auto& [_, n] : r) m = std::max(m, n);
  }
  return m;
}

void CooccurrenceMatrix::add_pair(ClusterId a, ClusterId b, std::uint32_t n) {
  check_id(a, size());
  check_id(b, size());
  if (a == b) throw DomainError("co-occurrence pairs must be of distinct clusters");
  rows_[a][b] += n;
  rows_[b][a] += n;
}

bool AddabilityMatrix::at(ClusterId i, ClusterId j) const {
  const auto& r = row(i);
  return std::binary_search(r.begin(), r.end(), j);
}

std::size_t AddabilityMatrix::num_set() const {
  std::size_t n = 0;
  for (const auto& r : rows_) n += r.size();
  return n;
}

void AddabilityMatrix::set(ClusterId i, ClusterId j) {
  check_id(i, size());
  check_id(j, size());
  auto& r = rows_[i];
  if (!r.empty() && r.back() >= j) throw DomainError("addability bits must be set in ascending order");
  r.push_back(j);
}

std::vector<ClusterSet> report_cluster_sets(const std::vector<corpus::Report>& reports,
                                            const clustering::ClusterAssignment& assignment) {
  std::vector<ClusterSet> sets;
  sets.reserve(reports.size());
  for (const auto& r : reports) {
    ClusterSet s;
    for (auto sid : r.findings_sentences) {
      if (sid >= assignment.num_sentences()) {
        throw DomainError("report '" + r.report_id + "' references sentence " + std::to_string(sid) +
                          " which has no cluster label");
      }
      const ClusterId c = assignment.label(sid);
      if (c != kNoise) s.push_back(c);
    }
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    sets.push_back(std::move(s));
  }
  return sets;
}

CooccurrenceMatrix build_cooccurrence_from_sets(const std::vector<ClusterSet>& sets, std::size_t num_clusters) {
  const bool any = std::any_of(sets.begin(), sets.end(), [](const ClusterSet& s) { return !s.empty(); });
  if (!any) throw DomainError("no co-occurrence signal: every report has an empty cluster set");
  CooccurrenceMatrix a(num_clusters);
  for (const auto& s : sets) {
    for (std::size_t x = 0; x < s.size(); ++x) {
      for (std::size_t y = x + 1; y < s.size(); ++y) a.add_pair(s[x], s[y]);
    }
  }
  return a;
}

CooccurrenceMatrix build_cooccurrence(const std::vector<corpus::Report>& reports,
                                      const clustering::ClusterAssignment& assignment) {
  return build_cooccurrence_from_sets(report_cluster_sets(reports, assignment), assignment.num_clusters());
}

std::map<ClusterId, double> normalized_row(const CooccurrenceMatrix& counts, ClusterId i) {
  std::map<ClusterId, double> out;
  const auto total = counts.row_sum(i);
  if (total == 0) return out;
  for (const auto& [j, n] : counts.row(i)) out[j] = static_cast<double>(n) / static_cast<double>(total);
  return out;
}

AddabilityMatrix build_addability(const CooccurrenceMatrix& counts, const signing::SignMap& signs, double tau_norm,
                                  std::uint32_t tau_count) {
  const std::size_t k = counts.size();
  AddabilityMatrix b(k, tau_norm, tau_count);
  for (std::size_t i = 0; i < k; ++i) {
    const auto ci = static_cast<ClusterId>(i);
    if (counts.row(ci).empty()) continue;
    if (i >= signs.size()) throw DomainError("missing sign for cluster " + std::to_string(i));
    for (const auto& [j, norm] : normalized_row(counts, ci)) {
      if (static_cast<std::size_t>(j) >= signs.size()) {
        throw DomainError("missing sign for cluster " + std::to_string(j));
      }
      if (norm > tau_norm && counts.count(ci, j) > tau_count && signs.positive(j)) b.set(ci, j);
    }
  }
  return b;
}

void save_cooccurrence(const CooccurrenceMatrix& counts, const std::filesystem::path& path,
                       const std::string& corpus_hash) {
  AtomicFileWriter w(path);
  w.stream() << json{{"header", {{"K", counts.size()}, {"corpus_hash", corpus_hash}}}}.dump() << '\n';
  for (std::size_t i = 0; i < counts.size(); ++i) {
    for (const auto& [j, n] : counts.row(static_cast<ClusterId>(i))) {
      if (static_cast<std::size_t>(j) <= i) continue;
      w.stream() << json{{"i", i}, {"j", j}, {"count", n}}.dump() << '\n';
    }
  }
  w.commit();
}

CooccurrenceMatrix load_cooccurrence(const std::filesystem::path& path) {
  CooccurrenceMatrix a;
  bool have_header = false;
  for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    try {
      auto rec = json::parse(line);
      if (!have_header) {
        a = CooccurrenceMatrix(rec.at("header").at("K").get<std::size_t>());
        have_header = true;
        return;
      }
      a.add_pair(rec.at("i").get<ClusterId>(), rec.at("j").get<ClusterId>(), rec.at("count").get<std::uint32_t>());
    } catch (const std::exception& e) {
      throw RecordError(line_no, e.what());
    }
  });
  if (!have_header) throw DomainError(path.string() + ": missing header record");
  return a;
}

void save_addability(const AddabilityMatrix& bits, const std::filesystem::path& path, const std::string& corpus_hash) {
  AtomicFileWriter w(path);
  json header = {{"K", bits.size()},
                 {"tau_norm", bits.tau_norm()},
                 {"tau_count", bits.tau_count()},
                 {"corpus_hash", corpus_hash}};
  w.stream() << json{{"header", header}}.dump() << '\n';
  for (std::size_t i = 0; i < bits.size(); ++i) {
    for (auto j : bits.row(static_cast<ClusterId>(i))) w.stream() << json{{"i", i}, {"j", j}}.dump() << '\n';
  }
  w.commit();
}

AddabilityMatrix load_addability(const std::filesystem::path& path) {
  AddabilityMatrix b;
  bool have_header = false;
  for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    try {
      auto rec = json::parse(line);
      if (!have_header) {
        const auto& h = rec.at("header");
        b = AddabilityMatrix(h.at("K").get<std::size_t>(), h.at("tau_norm").get<double>(),
                             h.at("tau_count").get<std::uint32_t>());
        have_header = true;
        return;
      }
      b.set(rec.at("i").get<ClusterId>(), rec.at("j").get<ClusterId>());
    } catch (const std::exception& e) {
      throw RecordError(line_no, e.what());
    }
  });
  if (!have_header) throw DomainError(path.string() + ": missing header record");
  return b;
}

}  // namespace fenrich::graph
