#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fenrich/embedding.hpp"
#include "fenrich/types.hpp"

namespace fenrich::clustering {

enum class Method { kKMeans, kDbscan, kHdbscan };

std::string to_string(Method m);
Method parse_method(const std::string& name);

// Parameters of a clustering run. Only the fields of the selected method are
// meaningful; defaults follow the library defaults of the usual
// implementations (DBSCAN eps 0.35 / min_pts 5, HDBSCAN min_cluster_size 5).
struct MethodParams {
  Method method = Method::kHdbscan;
  std::size_t k = 0;
  double eps = 0.35;
  std::size_t min_pts = 5;
  std::size_t min_cluster_size = 5;
  std::uint64_t seed = 0;
  std::size_t max_iter = 300;
};

// Sentence -> cluster labelling with its inverse. Cluster ids are dense,
// numbered by first appearance in ascending SentenceId order; kNoise marks
// unassigned sentences.
class ClusterAssignment {
 public:
  ClusterAssignment() = default;
  // Relabels `labels` canonically. Any negative label is treated as noise.
  ClusterAssignment(MethodParams params, const std::vector<ClusterId>& labels);

  const MethodParams& params() const noexcept { return params_; }
  const std::vector<ClusterId>& labels() const noexcept { return labels_; }
  ClusterId label(SentenceId id) const { return labels_.at(id); }

  std::size_t num_sentences() const noexcept { return labels_.size(); }
  std::size_t num_clusters() const noexcept { return members_.size(); }
  std::size_t num_noise() const noexcept;

  const std::vector<SentenceId>& members(ClusterId c) const { return members_.at(static_cast<std::size_t>(c)); }
  const std::vector<std::vector<SentenceId>>& all_members() const noexcept { return members_; }

  bool same_partition(const ClusterAssignment& other) const { return labels_ == other.labels_; }

 private:
  MethodParams params_;
  std::vector<ClusterId> labels_;
  std::vector<std::vector<SentenceId>> members_;
};

// ---- K-means -------------------------------------------------------------

struct KMeansResult {
  ClusterAssignment assignment;
  // centroids[c] is the mean of cluster c (canonical ids).
  std::vector<std::vector<double>> centroids;
  // Sum of squared distances after every assignment step; non-increasing.
  std::vector<double> sse_history;
  std::size_t iterations = 0;
  bool converged = false;

  double sse() const { return sse_history.empty() ? 0.0 : sse_history.back(); }
};

// Lloyd iterations from k-means++ seeding. Empty clusters are repaired by
// moving the point farthest from its centroid into them.
KMeansResult kmeans(const embedding::EmbeddingMatrix& matrix, std::size_t k, std::uint64_t seed,
                    std::size_t max_iter = 300);

// ---- density methods ------------------------------------------------------

// Core points have at least min_pts points (themselves included) within eps.
// Points are scanned in ascending id; a border point joins the first cluster
// that reaches it.
ClusterAssignment dbscan(const embedding::EmbeddingMatrix& matrix, double eps, std::size_t min_pts);

// HDBSCAN* with min_samples = min_cluster_size and excess-of-mass selection.
// If the condensed tree has no child clusters the root is kept as a single
// cluster, provided enough points persist to its final density level.
ClusterAssignment hdbscan(const embedding::EmbeddingMatrix& matrix, std::size_t min_cluster_size = 5);

ClusterAssignment run(const embedding::EmbeddingMatrix& matrix, const MethodParams& params);

// ---- statistics -----------------------------------------------------------

struct ClusterStats {
  std::size_t total_sentences_clustered = 0;
  std::size_t total_clusters = 0;
  double mean_size = 0.0;
  double median_size = 0.0;
  std::size_t min_size = 0;
  std::size_t max_size = 0;
};

// Over non-noise clusters only. Throws DomainError when there are none.
ClusterStats compute_stats(const ClusterAssignment& assignment);
ClusterStats compute_stats_from_sizes(std::vector<std::size_t> sizes);

// Two-column table: mean with 2 decimals, median with 1, thousands separators.
std::string format_stats_table(const ClusterStats& stats);
std::string format_fixed(double value, int decimals);

// ---- persistence ----------------------------------------------------------

// One record per sentence: {"sentence_id": i, "label": c}, -1 for noise.
void save_clusters(const ClusterAssignment& assignment, const std::filesystem::path& path);
ClusterAssignment load_clusters(const std::filesystem::path& path, const MethodParams& params = {});

}  // namespace fenrich::clustering
