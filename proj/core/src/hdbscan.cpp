#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "fenrich/clustering.hpp"
#include "fenrich/error.hpp"
#include "fenrich/parallel.hpp"

namespace fenrich::clustering {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Edge {
  std::size_t a;
  std::size_t b;
  double weight;
};

// Single-linkage merge. Nodes < n are points; node n + i is merge i.
struct Merge {
  std::size_t left;
  std::size_t right;
  double distance;
  std::size_t size;
};

struct CondensedRow {
  std::size_t parent;
  std::size_t child;
  double lambda;
  std::size_t size;
};

double distance(const embedding::EmbeddingMatrix& m, std::size_t i, std::size_t j) {
  return std::sqrt(embedding::squared_distance(m.row(i), m.row(j)));
}

// Distance to the min_samples-th nearest point, counting the point itself.
std::vector<double> core_distances(const embedding::EmbeddingMatrix& m, std::size_t min_samples) {
  const std::size_t n = m.rows();
  std::vector<double> core(n);
  parallel_for(n, [&](std::size_t i) {
    std::vector<double> row(n);
    for (std::size_t j = 0; j < n; ++j) row[j] = i == j ? 0.0 : distance(m, i, j);
    std::nth_element(row.begin(), row.begin() + (min_samples - 1), row.end());
    core[i] = row[min_samples - 1];
  });
  return core;
}

// Prim's algorithm on the dense mutual-reachability graph, starting at 0.
std::vector<Edge> mutual_reachability_mst(const embedding::EmbeddingMatrix& m, const std::vector<double>& core) {
  const std::size_t n = m.rows();
  std::vector<Edge> mst;
  mst.reserve(n - 1);
  std::vector<bool> in_tree(n, false);
  std::vector<double> best(n, kInf);
  std::vector<std::size_t> source(n, 0);
  std::size_t current = 0;
  in_tree[0] = true;
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t next = n;
    double next_w = kInf;
    for (std::size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double mr = std::max({distance(m, current, j), core[current], core[j]});
      if (mr < best[j]) {
        best[j] = mr;
        source[j] = current;
      }
      if (next == n || best[j] < next_w) {
        next = j;
        next_w = best[j];
      }
    }
    mst.push_back({source[next], next, next_w});
    in_tree[next] = true;
    current = next;
  }
  std::stable_sort(mst.begin(), mst.end(), [](const Edge& x, const Edge& y) { return x.weight < y.weight; });
  return mst;
}

std::vector<Merge> single_linkage(const std::vector<Edge>& mst, std::size_t n) {
  std::vector<std::size_t> parent(2 * n - 1);
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<std::size_t> size(2 * n - 1, 1);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  std::vector<Merge> merges;
  merges.reserve(n - 1);
  std::size_t next = n;
  for (const auto& e : mst) {
    const std::size_t ra = find(e.a);
    const std::size_t rb = find(e.b);
    merges.push_back({ra, rb, e.weight, size[ra] + size[rb]});
    parent[ra] = parent[rb] = next;
    size[next] = size[ra] + size[rb];
    ++next;
  }
  return merges;
}

std::vector<std::size_t> bfs_nodes(const std::vector<Merge>& merges, std::size_t n, std::size_t root) {
  std::vector<std::size_t> out;
  std::deque<std::size_t> queue{root};
  while (!queue.empty()) {
    const std::size_t node = queue.front();
    queue.pop_front();
    out.push_back(node);
    if (node >= n) {
      queue.push_back(merges[node - n].left);
      queue.push_back(merges[node - n].right);
    }
  }
  return out;
}

// Runt pruning: walks the merge tree top-down; a split yields two new
// clusters only when both sides have at least min_cluster_size points,
// otherwise the small side's points fall out of the parent.
std::vector<CondensedRow> condense(const std::vector<Merge>& merges, std::size_t n, std::size_t min_size) {
  const std::size_t root = 2 * n - 2;
  std::vector<std::size_t> relabel(root + 1, 0);
  std::vector<bool> ignore(root + 1, false);
  relabel[root] = n;
  std::size_t next_label = n + 1;
  std::vector<CondensedRow> rows;

  auto node_size = [&](std::size_t node) { return node >= n ? merges[node - n].size : std::size_t{1}; };
  auto fall_out = [&](std::size_t parent_label, std::size_t subtree, double lambda) {
    for (std::size_t sub : bfs_nodes(merges, n, subtree)) {
      if (sub < n) rows.push_back({parent_label, sub, lambda, 1});
      ignore[sub] = true;
    }
  };

  for (std::size_t node : bfs_nodes(merges, n, root)) {
    if (ignore[node] || node < n) continue;
    const Merge& mg = merges[node - n];
    const double lambda = mg.distance > 0.0 ? 1.0 / mg.distance : kInf;
    const std::size_t left_n = node_size(mg.left);
    const std::size_t right_n = node_size(mg.right);
    const std::size_t here = relabel[node];

    if (left_n >= min_size && right_n >= min_size) {
      relabel[mg.left] = next_label++;
      rows.push_back({here, relabel[mg.left], lambda, left_n});
      relabel[mg.right] = next_label++;
      rows.push_back({here, relabel[mg.right], lambda, right_n});
    } else if (left_n < min_size && right_n < min_size) {
      fall_out(here, mg.left, lambda);
      fall_out(here, mg.right, lambda);
    } else if (left_n < min_size) {
      relabel[mg.right] = here;
      fall_out(here, mg.left, lambda);
    } else {
      relabel[mg.left] = here;
      fall_out(here, mg.right, lambda);
    }
  }
  return rows;
}

}  // namespace

ClusterAssignment hdbscan(const embedding::EmbeddingMatrix& matrix, std::size_t min_cluster_size) {
  const std::size_t n = matrix.rows();
  if (min_cluster_size < 2) throw DomainError("hdbscan: min_cluster_size must be at least 2");
  if (n < min_cluster_size) {
    throw DomainError("hdbscan: " + std::to_string(n) + " points is fewer than min_cluster_size " +
                      std::to_string(min_cluster_size));
  }

  MethodParams params;
  params.method = Method::kHdbscan;
  params.min_cluster_size = min_cluster_size;

  const auto core = core_distances(matrix, min_cluster_size);
  const auto merges = single_linkage(mutual_reachability_mst(matrix, core), n);
  const auto rows = condense(merges, n, min_cluster_size);

  // Condensed cluster ids are n (root) .. max_id; children have larger ids
  // than their parents.
  std::size_t max_id = n;
  for (const auto& r : rows) max_id = std::max({max_id, r.parent, r.size > 1 ? r.child : n});
  const std::size_t num_ids = max_id - n + 1;
  auto idx = [&](std::size_t cluster) { return cluster - n; };

  std::vector<double> birth(num_ids, 0.0);
  std::vector<std::size_t> parent_of(num_ids, n);
  std::vector<std::vector<std::size_t>> children(num_ids);
  std::vector<std::size_t> point_parent(n, n);
  std::vector<double> point_lambda(n, 0.0);
  for (const auto& r : rows) {
    if (r.size > 1) {
      birth[idx(r.child)] = r.lambda;
      parent_of[idx(r.child)] = r.parent;
      children[idx(r.parent)].push_back(r.child);
    } else {
      point_parent[r.child] = r.parent;
      point_lambda[r.child] = r.lambda;
    }
  }

  std::vector<double> stability(num_ids, 0.0);
  for (const auto& r : rows) {
    const double b = birth[idx(r.parent)];
    if (r.lambda == b) continue;  // also covers inf - inf
    stability[idx(r.parent)] += (r.lambda - b) * static_cast<double>(r.size);
  }

  // Excess of mass, leaves first; the root is never selected here.
  std::vector<bool> selected(num_ids, false);
  for (std::size_t id = max_id; id > n; --id) {
    const std::size_t k = idx(id);
    double subtree = 0.0;
    for (auto c : children[k]) subtree += stability[idx(c)];
    if (subtree > stability[k]) {
      stability[k] = subtree;
    } else {
      selected[k] = true;
      std::deque<std::size_t> queue(children[k].begin(), children[k].end());
      while (!queue.empty()) {
        const std::size_t c = queue.front();
        queue.pop_front();
        selected[idx(c)] = false;
        queue.insert(queue.end(), children[idx(c)].begin(), children[idx(c)].end());
      }
    }
  }

  std::vector<ClusterId> labels(n, kNoise);
  if (children[0].empty()) {
    // No split survived condensation: keep the root as one cluster made of
    // the points that persist to the root's densest level.
    double top = 0.0;
    for (std::size_t p = 0; p < n; ++p) top = std::max(top, point_lambda[p]);
    std::size_t count = 0;
    for (std::size_t p = 0; p < n; ++p) count += point_lambda[p] >= top;
    if (count >= min_cluster_size) {
      for (std::size_t p = 0; p < n; ++p) {
        if (point_lambda[p] >= top) labels[p] = 0;
      }
    }
    return ClusterAssignment(params, labels);
  }

  for (std::size_t p = 0; p < n; ++p) {
    std::size_t c = point_parent[p];
    while (c != n && !selected[idx(c)]) c = parent_of[idx(c)];
    if (c != n) labels[p] = static_cast<ClusterId>(c);
  }
  return ClusterAssignment(params, labels);
}

}  // namespace fenrich::clustering
