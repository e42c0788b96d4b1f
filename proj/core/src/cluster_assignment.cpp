#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include <json.hpp>

#include "fenrich/clustering.hpp"
#include "fenrich/error.hpp"
#include "fenrich/jsonl.hpp"

namespace fenrich::clustering {

std::string to_string(Method m) {
  switch (m) {
    case Method::kKMeans:
      return "kmeans";
    case Method::kDbscan:
      return "dbscan";
    case Method::kHdbscan:
      return "hdbscan";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "kmeans") return Method::kKMeans;
  if (name == "dbscan") return Method::kDbscan;
  if (name == "hdbscan") return Method::kHdbscan;
  throw DomainError("unknown clustering method '" + name + "'");
}

ClusterAssignment::ClusterAssignment(MethodParams params, const std::vector<ClusterId>& labels)
    : params_(params), labels_(labels.size(), kNoise) {
  std::vector<ClusterId> remap;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const ClusterId raw = labels[i];
    if (raw < 0) continue;
    if (static_cast<std::size_t>(raw) >= remap.size()) remap.resize(raw + 1, kNoise);
    if (remap[raw] == kNoise) {
      remap[raw] = static_cast<ClusterId>(members_.size());
      members_.emplace_back();
    }
    labels_[i] = remap[raw];
    members_[remap[raw]].push_back(static_cast<SentenceId>(i));
  }
}

std::size_t ClusterAssignment::num_noise() const noexcept {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), kNoise));
}

ClusterAssignment run(const embedding::EmbeddingMatrix& matrix, const MethodParams& params) {
  switch (params.method) {
    case Method::kKMeans: {
      auto result = kmeans(matrix, params.k, params.seed, params.max_iter);
      return ClusterAssignment(params, result.assignment.labels());
    }
    case Method::kDbscan:
      return ClusterAssignment(params, dbscan(matrix, params.eps, params.min_pts).labels());
    case Method::kHdbscan:
      return ClusterAssignment(params, hdbscan(matrix, params.min_cluster_size).labels());
  }
  throw DomainError("unknown clustering method");
}

ClusterStats compute_stats_from_sizes(std::vector<std::size_t> sizes) {
  if (sizes.empty()) throw DomainError("cluster statistics need at least one cluster");
  std::sort(sizes.begin(), sizes.end());
  ClusterStats s;
  s.total_clusters = sizes.size();
  for (auto n : sizes) s.total_sentences_clustered += n;
  s.mean_size = static_cast<double>(s.total_sentences_clustered) / static_cast<double>(s.total_clusters);
  const std::size_t mid = sizes.size() / 2;
  s.median_size = sizes.size() % 2 ? static_cast<double>(sizes[mid])
                                   : (static_cast<double>(sizes[mid - 1]) + static_cast<double>(sizes[mid])) / 2.0;
  s.min_size = sizes.front();
  s.max_size = sizes.back();
  return s;
}

ClusterStats compute_stats(const ClusterAssignment& assignment) {
  std::vector<std::size_t> sizes;
  sizes.reserve(assignment.num_clusters());
  for (const auto& m : assignment.all_members()) sizes.push_back(m.size());
  return compute_stats_from_sizes(std::move(sizes));
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

namespace {

std::string with_separators(std::string digits) {
  const auto dot = digits.find('.');
  std::string int_part = digits.substr(0, dot);
  const std::string frac = dot == std::string::npos ? "" : digits.substr(dot);
  for (int i = static_cast<int>(int_part.size()) - 3; i > 0; i -= 3) int_part.insert(i, ",");
  return int_part + frac;
}

}  // namespace

std::string format_stats_table(const ClusterStats& s) {
  const std::pair<const char*, std::string> rows[] = {
      {"Total Sentences", with_separators(std::to_string(s.total_sentences_clustered))},
      {"Total Clusters", with_separators(std::to_string(s.total_clusters))},
      {"Average Cluster Size", with_separators(format_fixed(s.mean_size, 2))},
      {"Median Cluster Size", with_separators(format_fixed(s.median_size, 1))},
      {"Min Cluster Size", with_separators(std::to_string(s.min_size))},
      {"Max Cluster Size", with_separators(std::to_string(s.max_size))},
  };
  std::size_t w = 9;
  for (const auto& [name, _] : rows) w = std::max(w, std::string(name).size());
  std::string out;
  auto line = [&](const std::string& a, const std::string& b) {
    out += a + std::string(w - a.size() + 2, ' ') + b + '\n';
  };
  line("Statistic", "Value");
  for (const auto& [name, value] : rows) line(name, value);
  return out;
}

void save_clusters(const ClusterAssignment& assignment, const std::filesystem::path& path) {
  AtomicFileWriter w(path);
  const auto& labels = assignment.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    w.stream() << nlohmann::json{{"sentence_id", i}, {"label", labels[i]}}.dump() << '\n';
  }
  w.commit();
}

ClusterAssignment load_clusters(const std::filesystem::path& path, const MethodParams& params) {
  std::vector<ClusterId> labels;
  for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    try {
      auto rec = nlohmann::json::parse(line);
      const auto id = rec.at("sentence_id").get<std::size_t>();
      if (id != labels.size()) throw DomainError("sentence_id out of sequence");
      labels.push_back(rec.at("label").get<ClusterId>());
    } catch (const std::exception& e) {
      throw RecordError(line_no, e.what());
    }
  });
  return ClusterAssignment(params, labels);
}

}  // namespace fenrich::clustering
