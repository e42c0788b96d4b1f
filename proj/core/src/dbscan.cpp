#include <deque>

#include "fenrich/clustering.hpp"
#include "fenrich/error.hpp"
#include "fenrich/parallel.hpp"

namespace fenrich::clustering {

ClusterAssignment dbscan(const embedding::EmbeddingMatrix& matrix, double eps, std::size_t min_pts) {
  if (!(eps > 0.0)) throw DomainError("dbscan: eps must be positive");
  if (min_pts == 0) throw DomainError("dbscan: min_pts must be positive");

  const std::size_t n = matrix.rows();
  const double eps2 = eps * eps;

  // Neighbourhoods include the point itself and are sorted by id.
  std::vector<std::vector<std::size_t>> neighbours(n);
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (embedding::squared_distance(matrix.row(i), matrix.row(j)) <= eps2) neighbours[i].push_back(j);
    }
  });

  std::vector<ClusterId> labels(n, kNoise);
  ClusterId next_cluster = 0;
  for (std::size_t p = 0; p < n; ++p) {
    if (labels[p] != kNoise || neighbours[p].size() < min_pts) continue;
    const ClusterId c = next_cluster++;
    labels[p] = c;
    std::deque<std::size_t> frontier{p};
    while (!frontier.empty()) {
      const std::size_t q = frontier.front();
      frontier.pop_front();
      if (neighbours[q].size() < min_pts) continue;  // border: does not expand
      for (std::size_t r : neighbours[q]) {
        if (labels[r] != kNoise) continue;
        labels[r] = c;
        frontier.push_back(r);
      }
    }
  }

  MethodParams params;
  params.method = Method::kDbscan;
  params.eps = eps;
  params.min_pts = min_pts;
  return ClusterAssignment(params, labels);
}

}  // namespace fenrich::clustering
