#pragma once

// Independent reference implementations used as test oracles. They follow
// the definitions directly and favour obviousness over speed.

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "fenrich/clustering.hpp"
#include "fenrich/embedding.hpp"
#include "fenrich/enrichment.hpp"
#include "fenrich/graph.hpp"
#include "fenrich/signing.hpp"

namespace fenrich::oracle {

inline signing::SignMap make_signs(const std::vector<int>& s) {
  signing::SignMap m;
  for (std::size_t c = 0; c < s.size(); ++c) {
    m.signs.push_back(s[c] > 0 ? Sign::kPositive : Sign::kNegative);
    m.provenance.push_back(signing::Provenance::kManual);
    m.representative.push_back(0);
  }
  return m;
}

inline graph::AddabilityMatrix make_addability(std::size_t k, std::vector<std::pair<int, int>> bits) {
  std::sort(bits.begin(), bits.end());
  bits.erase(std::unique(bits.begin(), bits.end()), bits.end());
  graph::AddabilityMatrix b(k, 0.0, 0);
  for (auto [i, j] : bits) b.set(i, j);
  return b;
}

// Dense copy of B for the oracles, so they never touch the sparse lookup.
inline std::vector<std::vector<bool>> dense(const graph::AddabilityMatrix& b) {
  std::vector<std::vector<bool>> d(b.size(), std::vector<bool>(b.size(), false));
  for (std::size_t i = 0; i < b.size(); ++i) {
    for (auto j : b.row(static_cast<ClusterId>(i))) d[i][static_cast<std::size_t>(j)] = true;
  }
  return d;
}

// N+(F) by scanning every cluster.
inline ClusterSet oracle_neighborhood(const ClusterSet& f, const graph::AddabilityMatrix& b) {
  const auto d = dense(b);
  ClusterSet out;
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (std::find(f.begin(), f.end(), static_cast<ClusterId>(j)) != f.end()) continue;
    bool all = true;
    for (auto c : f) all = all && d[static_cast<std::size_t>(c)][j];
    if (all) out.push_back(static_cast<ClusterId>(j));
  }
  return out;
}

// Condition-by-condition validity. In strict mode the members are ordered F
// first then E ascending and only B[earlier, later] is consulted.
inline bool oracle_valid(const ClusterSet& f, const ClusterSet& e, const graph::AddabilityMatrix& b,
                         const signing::SignMap& signs, bool strict = false) {
  const auto d = dense(b);
  auto in_f = [&](ClusterId x) { return std::find(f.begin(), f.end(), x) != f.end(); };
  auto pos = [&](ClusterId x) { return signs.signs[static_cast<std::size_t>(x)] == Sign::kPositive; };
  auto bit = [&](ClusterId x, ClusterId y) { return d[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)]; };

  std::set<ClusterId> es(e.begin(), e.end());
  if (es.size() != e.size()) return false;
  for (auto x : e) {
    if (in_f(x)) return false;   // (i)
    if (!pos(x)) return false;   // (iii)
  }
  std::vector<ClusterId> order(f.begin(), f.end());
  order.insert(order.end(), es.begin(), es.end());
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const ClusterId x = order[i], y = order[j];
      if (in_f(x) && in_f(y)) continue;
      if (strict) {
        if (!bit(x, y)) return false;
      } else {
        if (pos(y) && !bit(x, y)) return false;
        if (pos(x) && !bit(y, x)) return false;
      }
    }
  }
  return true;
}

// Every subset of N+(F), kept if valid and if no cluster outside F u E can
// be added while staying valid.
inline std::vector<ClusterSet> oracle_largest(const ClusterSet& f, const graph::AddabilityMatrix& b,
                                              const signing::SignMap& signs, bool strict = false) {
  const auto cand = oracle_neighborhood(f, b);
  std::vector<ClusterSet> out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << cand.size()); ++mask) {
    ClusterSet e;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (mask >> i & 1) e.push_back(cand[i]);
    }
    if (!oracle_valid(f, e, b, signs, strict)) continue;
    bool maximal = true;
    for (std::size_t c = 0; c < b.size() && maximal; ++c) {
      const auto id = static_cast<ClusterId>(c);
      if (std::find(f.begin(), f.end(), id) != f.end() || std::find(e.begin(), e.end(), id) != e.end()) continue;
      ClusterSet grown = e;
      grown.push_back(id);
      std::sort(grown.begin(), grown.end());
      if (oracle_valid(f, grown, b, signs, strict)) maximal = false;
    }
    if (maximal) out.push_back(e);
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct EnrichmentInstance {
  graph::AddabilityMatrix b;
  signing::SignMap signs;
  ClusterSet f;
};

// Random signs and B (respecting the sign mask, as build_addability does),
// with a finding set whose candidate neighbourhood has at most max_cand
// members.
inline EnrichmentInstance random_instance(std::mt19937_64& rng, std::size_t max_cand = 15) {
  std::uniform_int_distribution<std::size_t> kdist(4, 22);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    const std::size_t k = kdist(rng);
    const double p_pos = 0.4 + 0.5 * u(rng);
    const double density = 0.3 + 0.65 * u(rng);
    std::vector<int> s(k);
    for (auto& v : s) v = u(rng) < p_pos ? 1 : -1;
    std::vector<std::pair<int, int>> bits;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        if (i != j && s[j] > 0 && u(rng) < density) bits.emplace_back(static_cast<int>(i), static_cast<int>(j));
      }
    }
    std::vector<ClusterId> ids(k);
    for (std::size_t i = 0; i < k; ++i) ids[i] = static_cast<ClusterId>(i);
    std::shuffle(ids.begin(), ids.end(), rng);
    const std::size_t fsize = 1 + static_cast<std::size_t>(u(rng) * std::min<std::size_t>(3, k - 1));
    ClusterSet f(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(fsize));
    std::sort(f.begin(), f.end());
    EnrichmentInstance inst{make_addability(k, bits), make_signs(s), f};
    if (oracle_neighborhood(f, inst.b).size() <= max_cand) return inst;
  }
}

// The worked figure instance. Clusters c1..c9 map to ids 0..8; the base
// report holds c1..c4. c7 is positive but never co-occurs with c1 or c3.
struct FigureInstance {
  graph::CooccurrenceMatrix a;
  graph::AddabilityMatrix b;
  signing::SignMap signs;
  ClusterSet f;
};

inline FigureInstance figure_instance() {
  const std::vector<ClusterSet> reports = {
      {0, 1, 2, 3},
      {0, 1, 2, 3, 4},     // c5 with every base cluster
      {0, 1, 2, 3, 5},     // c6 likewise, but negative
      {1, 3, 6},           // c7 only with c2, c4
      {0, 1, 2, 3, 7, 8},  // c8, c9 together with every base cluster
  };
  FigureInstance fig;
  fig.signs = make_signs({+1, -1, -1, +1, +1, -1, +1, +1, +1});
  fig.a = graph::build_cooccurrence_from_sets(reports, 9);
  fig.b = graph::build_addability(fig.a, fig.signs, 0.0, 0);
  fig.f = {0, 1, 2, 3};
  return fig;
}

// Plain DBSCAN: components of the core graph, discovered in ascending order
// of their smallest core point; a border point goes to the earliest such
// component holding one of its core neighbours.
inline std::vector<ClusterId> oracle_dbscan(const embedding::EmbeddingMatrix& m, double eps, std::size_t min_pts) {
  const std::size_t n = m.rows();
  std::vector<std::vector<bool>> near(n, std::vector<bool>(n));
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t cnt = 0;
    for (std::size_t j = 0; j < n; ++j) {
      near[i][j] = embedding::squared_distance(m.row(i), m.row(j)) <= eps * eps;
      cnt += near[i][j];
    }
    core[i] = cnt >= min_pts;
  }
  std::vector<int> comp(n, -1);
  int ncomp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i] || comp[i] >= 0) continue;
    comp[i] = ncomp;
    bool changed = true;
    while (changed) {  // closure by repeated sweeps
      changed = false;
      for (std::size_t a = 0; a < n; ++a) {
        if (!core[a] || comp[a] != ncomp) continue;
        for (std::size_t b = 0; b < n; ++b) {
          if (core[b] && near[a][b] && comp[b] < 0) {
            comp[b] = ncomp;
            changed = true;
          }
        }
      }
    }
    ++ncomp;
  }
  std::vector<ClusterId> labels(n, kNoise);
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) {
      labels[i] = comp[i];
      continue;
    }
    int best = -1;
    for (std::size_t j = 0; j < n; ++j) {
      if (core[j] && near[i][j] && (best < 0 || comp[j] < best)) best = comp[j];
    }
    labels[i] = best;
  }
  return labels;
}

// Linear scan for the best masked row; strict improvement keeps the smallest id.
inline embedding::Neighbor oracle_nearest(std::span<const float> q, const embedding::EmbeddingMatrix& m,
                                          const std::vector<bool>& mask) {
  embedding::Neighbor best{0, -2.0};
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (!mask[i]) continue;
    double s = 0.0;
    for (std::size_t j = 0; j < m.dim(); ++j) s += static_cast<double>(q[j]) * m.row(i)[j];
    if (s > best.cosine) best = {static_cast<SentenceId>(i), s};
  }
  return best;
}

inline embedding::EmbeddingMatrix random_matrix(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::normal_distribution<float> g(0.0f, 1.0f);
  std::vector<float> raw(n * dim);
  for (auto& v : raw) v = g(rng);
  return embedding::EmbeddingMatrix(dim, std::move(raw));
}

}  // namespace fenrich::oracle
