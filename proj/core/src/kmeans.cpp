#include <limits>

#include "fenrich/clustering.hpp"
#include "fenrich/error.hpp"
#include "fenrich/parallel.hpp"
#include "fenrich/random.hpp"

namespace fenrich::clustering {
namespace {

using embedding::EmbeddingMatrix;
using Centroids = std::vector<std::vector<double>>;

double sq_dist(std::span<const float> x, const std::vector<double>& c) {
  double s = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    const double d = static_cast<double>(x[j]) - c[j];
    s += d * d;
  }
  return s;
}

std::vector<double> to_double(std::span<const float> x) { return {x.begin(), x.end()}; }

Centroids seed_plus_plus(const EmbeddingMatrix& m, std::size_t k, Rng& rng) {
  const std::size_t n = m.rows();
  Centroids centers;
  centers.reserve(k);
  std::vector<bool> chosen(n, false);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());

  std::size_t next = rng.uniform_index(n);
  for (;;) {
    chosen[next] = true;
    centers.push_back(to_double(m.row(next)));
    if (centers.size() == k) break;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(m.row(i), centers.back()));
      total += d2[i];
    }
    if (total > 0.0) {
      const double target = rng.uniform01() * total;
      double acc = 0.0;
      next = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        acc += d2[i];
        next = i;
        if (acc > target) break;
      }
    } else {
      // Every point coincides with a center: pick uniformly among the rest.
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) rest.push_back(i);
      }
      next = rest[rng.uniform_index(rest.size())];
    }
  }
  return centers;
}

// Returns the number of changed labels. On ties the current label is kept,
// otherwise the smallest centroid index wins.
std::size_t assign(const EmbeddingMatrix& m, const Centroids& centers, std::vector<ClusterId>& labels,
                   std::vector<double>& dist) {
  std::vector<unsigned char> changed(m.rows(), 0);
  parallel_for(m.rows(), [&](std::size_t i) {
    const auto x = m.row(i);
    const ClusterId current = labels[i];
    double best = std::numeric_limits<double>::infinity();
    ClusterId best_c = 0;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const double d = sq_dist(x, centers[c]);
      if (d < best) {
        best = d;
        best_c = static_cast<ClusterId>(c);
      }
    }
    if (current >= 0 && sq_dist(x, centers[current]) == best) best_c = current;
    changed[i] = best_c != current;
    labels[i] = best_c;
    dist[i] = best;
  });
  std::size_t n = 0;
  for (auto c : changed) n += c;
  return n;
}

void update_means(const EmbeddingMatrix& m, const std::vector<ClusterId>& labels, Centroids& centers,
                  std::vector<std::size_t>& sizes) {
  const std::size_t dim = m.dim();
  Centroids sums(centers.size(), std::vector<double>(dim, 0.0));
  std::fill(sizes.begin(), sizes.end(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& s = sums[labels[i]];
    const auto x = m.row(i);
    for (std::size_t j = 0; j < dim; ++j) s[j] += x[j];
    ++sizes[labels[i]];
  }
  for (std::size_t c = 0; c < centers.size(); ++c) {
    if (sizes[c] == 0) continue;  // left for repair_empty
    for (std::size_t j = 0; j < dim; ++j) centers[c][j] = sums[c][j] / static_cast<double>(sizes[c]);
  }
}

// Moves the point farthest from its centroid (among clusters with more than
// one member) into each empty cluster. Returns true if anything moved.
bool repair_empty(const EmbeddingMatrix& m, std::vector<ClusterId>& labels, Centroids& centers,
                  std::vector<std::size_t>& sizes) {
  bool moved = false;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    if (sizes[c] != 0) continue;
    double far = -1.0;
    std::size_t pick = labels.size();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (sizes[labels[i]] < 2) continue;
      const double d = sq_dist(m.row(i), centers[labels[i]]);
      if (d > far) {
        far = d;
        pick = i;
      }
    }
    if (pick == labels.size()) throw DomainError("k-means: cannot repair empty cluster");
    --sizes[labels[pick]];
    labels[pick] = static_cast<ClusterId>(c);
    sizes[c] = 1;
    centers[c] = to_double(m.row(pick));
    moved = true;
  }
  return moved;
}

double sse_of(const EmbeddingMatrix& m, const std::vector<ClusterId>& labels, const Centroids& centers) {
  double s = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) s += sq_dist(m.row(i), centers[labels[i]]);
  return s;
}

}  // namespace

KMeansResult kmeans(const EmbeddingMatrix& matrix, std::size_t k, std::uint64_t seed, std::size_t max_iter) {
  const std::size_t n = matrix.rows();
  if (k == 0) throw DomainError("k-means: k must be positive");
  if (k > n) {
    throw DomainError("k-means: k=" + std::to_string(k) + " exceeds the number of sentences " +
                      std::to_string(n));
  }
  if (max_iter == 0) throw DomainError("k-means: max_iter must be positive");

  Rng rng(seed);
  Centroids centers = seed_plus_plus(matrix, k, rng);
  std::vector<ClusterId> labels(n, kNoise);
  std::vector<double> dist(n);
  std::vector<std::size_t> sizes(k, 0);

  KMeansResult result;
  assign(matrix, centers, labels, dist);
  result.sse_history.push_back(sse_of(matrix, labels, centers));

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    update_means(matrix, labels, centers, sizes);
    const bool repaired = repair_empty(matrix, labels, centers, sizes);
    const std::size_t changed = assign(matrix, centers, labels, dist);
    result.sse_history.push_back(sse_of(matrix, labels, centers));
    result.iterations = iter + 1;
    if (changed == 0 && !repaired) {
      result.converged = true;
      break;
    }
  }

  update_means(matrix, labels, centers, sizes);
  if (repair_empty(matrix, labels, centers, sizes)) update_means(matrix, labels, centers, sizes);

  MethodParams params;
  params.method = Method::kKMeans;
  params.k = k;
  params.seed = seed;
  params.max_iter = max_iter;
  result.assignment = ClusterAssignment(params, labels);

  result.centroids.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    const auto& members = result.assignment.members(static_cast<ClusterId>(c));
    result.centroids[c] = centers[labels[members.front()]];
  }
  return result;
}

}  // namespace fenrich::clustering
