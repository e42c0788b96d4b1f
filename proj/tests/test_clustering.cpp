#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "fenrich/clustering.hpp"
#include "fenrich/error.hpp"
#include "support/oracles.hpp"

using namespace fenrich;
using namespace fenrich::clustering;
using embedding::EmbeddingMatrix;

namespace {

EmbeddingMatrix from_rows(const std::vector<std::vector<float>>& rows) {
  std::vector<float> raw;
  for (const auto& r : rows) raw.insert(raw.end(), r.begin(), r.end());
  return EmbeddingMatrix(rows.front().size(), std::move(raw));
}

double sse_of(const EmbeddingMatrix& m, const std::vector<ClusterId>& labels, std::size_t k) {
  const std::size_t d = m.dim();
  std::vector<std::vector<double>> mean(k, std::vector<double>(d, 0.0));
  std::vector<std::size_t> n(k, 0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    ++n[labels[i]];
    for (std::size_t j = 0; j < d; ++j) mean[labels[i]][j] += m.row(i)[j];
  }
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = m.row(i)[j] - mean[labels[i]][j] / static_cast<double>(n[labels[i]]);
      s += diff * diff;
    }
  }
  return s;
}

void expect_inverse(const ClusterAssignment& a) {
  std::size_t listed = 0;
  for (std::size_t c = 0; c < a.num_clusters(); ++c) {
    for (auto s : a.members(static_cast<ClusterId>(c))) {
      EXPECT_EQ(a.label(s), static_cast<ClusterId>(c));
      ++listed;
    }
  }
  EXPECT_EQ(listed + a.num_noise(), a.num_sentences());
}

nlohmann::json reference_cases() {
  std::ifstream in(FENRICH_FIXTURE_DIR "/hdbscan_reference.json");
  return nlohmann::json::parse(in);
}

EmbeddingMatrix matrix_of(const nlohmann::json& points) {
  std::vector<float> raw;
  for (const auto& p : points) {
    for (const auto& x : p) raw.push_back(x.get<float>());
  }
  return EmbeddingMatrix(points.at(0).size(), std::move(raw));
}

}  // namespace

// ---- assignment -----------------------------------------------------------

TEST(ClusterAssignment, CanonicalRelabelling) {
  ClusterAssignment a({}, {7, -1, 3, 7, -5, 3, 9});
  EXPECT_EQ(a.labels(), (std::vector<ClusterId>{0, kNoise, 1, 0, kNoise, 1, 2}));
  EXPECT_EQ(a.num_clusters(), 3u);
  EXPECT_EQ(a.num_noise(), 2u);
  EXPECT_EQ(a.members(1), (std::vector<SentenceId>{2, 5}));
  expect_inverse(a);
}

TEST(ClusterAssignment, PersistenceRoundTrip) {
  ClusterAssignment a({}, {0, -1, 1, 0});
  const auto p = std::filesystem::temp_directory_path() / "fenrich_clusters.jsonl";
  save_clusters(a, p);
  EXPECT_TRUE(load_clusters(p).same_partition(a));
}

// ---- k-means --------------------------------------------------------------

TEST(KMeans, KEqualsNGivesSingletons) {
  std::mt19937_64 rng(1);
  const auto m = oracle::random_matrix(rng, 12, 5);
  const auto r = kmeans(m, 12, 7);
  EXPECT_EQ(r.assignment.num_clusters(), 12u);
  EXPECT_NEAR(r.sse(), 0.0, 1e-12);
}

TEST(KMeans, TwoGroupsMatchExhaustiveOptimum) {
  const auto m = from_rows({{1, 0.02f, 0}, {1, -0.03f, 0.01f}, {1, 0, -0.02f},
                            {0, 1, 0.03f}, {0.02f, 1, 0}, {-0.01f, 1, -0.02f}});
  const auto r = kmeans(m, 2, 123);
  EXPECT_EQ(r.assignment.labels(), (std::vector<ClusterId>{0, 0, 0, 1, 1, 1}));

  double best = 1e300;
  for (unsigned mask = 1; mask < (1u << 5); ++mask) {  // point 5 fixed in cluster 1
    std::vector<ClusterId> l(6, 1);
    for (int i = 0; i < 5; ++i) l[i] = (mask >> i & 1) ? 0 : 1;
    best = std::min(best, sse_of(m, l, 2));
  }
  EXPECT_NEAR(r.sse(), best, 1e-9);
}

TEST(KMeans, SingleClusterCentroidIsMean) {
  std::mt19937_64 rng(2);
  const auto m = oracle::random_matrix(rng, 9, 4);
  const auto r = kmeans(m, 1, 0);
  for (std::size_t j = 0; j < 4; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 9; ++i) mean += m.row(i)[j];
    EXPECT_NEAR(r.centroids[0][j], mean / 9.0, 1e-9);
  }
}

TEST(KMeans, InvalidK) {
  std::mt19937_64 rng(3);
  const auto m = oracle::random_matrix(rng, 4, 3);
  EXPECT_THROW(kmeans(m, 0, 0), DomainError);
  EXPECT_THROW(kmeans(m, 5, 0), DomainError);
}

TEST(KMeans, IdenticalPointsStillFillEveryCluster) {
  const auto m = from_rows({{1, 0}, {1, 0}, {1, 0}, {1, 0}, {0, 1}});
  const auto r = kmeans(m, 4, 9);
  EXPECT_EQ(r.assignment.num_clusters(), 4u);
  expect_inverse(r.assignment);
}

TEST(KMeans, SseMonotoneFixedPointAndMeanSize) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 40 + rng() % 60, k = 2 + rng() % 10;
    const auto m = oracle::random_matrix(rng, n, 6);
    const auto r = kmeans(m, k, rng());
    for (std::size_t i = 1; i < r.sse_history.size(); ++i) {
      EXPECT_LE(r.sse_history[i], r.sse_history[i - 1] + 1e-12);
    }
    EXPECT_EQ(r.assignment.num_clusters(), k);
    EXPECT_EQ(r.assignment.num_noise(), 0u);
    const auto stats = compute_stats(r.assignment);
    EXPECT_EQ(stats.mean_size, static_cast<double>(n) / static_cast<double>(k));
    expect_inverse(r.assignment);
    if (r.converged) {
      // Each point already sits in a nearest centroid.
      for (std::size_t i = 0; i < n; ++i) {
        const auto own = static_cast<std::size_t>(r.assignment.label(static_cast<SentenceId>(i)));
        auto dist = [&](std::size_t c) {
          double s = 0.0;
          for (std::size_t j = 0; j < 6; ++j) s += (m.row(i)[j] - r.centroids[c][j]) * (m.row(i)[j] - r.centroids[c][j]);
          return s;
        };
        for (std::size_t c = 0; c < k; ++c) EXPECT_LE(dist(own), dist(c) + 1e-12);
      }
    }
  }
}

TEST(KMeans, DeterministicForSeed) {
  std::mt19937_64 rng(5);
  const auto m = oracle::random_matrix(rng, 80, 8);
  EXPECT_TRUE(kmeans(m, 6, 99).assignment.same_partition(kmeans(m, 6, 99).assignment));
}

// ---- DBSCAN ---------------------------------------------------------------

TEST(Dbscan, IdenticalPointsOneCluster) {
  const auto m = from_rows({{1, 0}, {1, 0}, {1, 0}, {1, 0}});
  const auto a = dbscan(m, 0.1, 3);
  EXPECT_EQ(a.num_clusters(), 1u);
  EXPECT_EQ(a.num_noise(), 0u);
}

TEST(Dbscan, IsolatedPointIsNoise) {
  const auto m = from_rows({{1, 0}, {1, 0.01f}, {0, 1}});
  const auto a = dbscan(m, 0.1, 2);
  EXPECT_EQ(a.labels(), (std::vector<ClusterId>{0, 0, kNoise}));
}

TEST(Dbscan, MatchesNaiveOracle) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 60; ++t) {
    const auto m = oracle::random_matrix(rng, 30, 3);
    const double eps = 0.3 + 0.1 * (t % 6);
    const std::size_t min_pts = 2 + t % 4;
    const ClusterAssignment want({}, oracle::oracle_dbscan(m, eps, min_pts));
    ASSERT_EQ(dbscan(m, eps, min_pts).labels(), want.labels()) << "case " << t;
  }
}

TEST(Dbscan, EveryClusterHasACorePoint) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 50; ++t) {
    const auto m = oracle::random_matrix(rng, 60, 3);
    const std::size_t min_pts = 3 + t % 3;
    const auto a = dbscan(m, 0.45, min_pts);
    for (std::size_t c = 0; c < a.num_clusters(); ++c) {
      bool has_core = false;
      for (auto s : a.members(static_cast<ClusterId>(c))) {
        std::size_t nb = 0;
        for (std::size_t j = 0; j < m.rows(); ++j) nb += embedding::squared_distance(m.row(s), m.row(j)) <= 0.45 * 0.45;
        has_core = has_core || nb >= min_pts;
      }
      EXPECT_TRUE(has_core);
    }
    expect_inverse(a);
  }
}

TEST(Dbscan, BorderClaimCanLeaveClusterBelowMinPts) {
  // Points on the unit circle; chord ~ angle at this scale. The border point
  // at 0.1 reaches the cores at 0 and 0.2, and the first cluster takes it,
  // leaving the second with three members for min_pts = 4.
  std::vector<std::vector<float>> rows;
  for (double a : {-0.09, -0.05, 0.0, 0.1, 0.2, 0.25, 0.29}) {
    rows.push_back({static_cast<float>(std::cos(a)), static_cast<float>(std::sin(a))});
  }
  const auto m = from_rows(rows);
  const auto a = dbscan(m, 0.1, 4);
  EXPECT_EQ(a.labels(), (std::vector<ClusterId>{0, 0, 0, 0, 1, 1, 1}));
  EXPECT_EQ(a.labels(), ClusterAssignment({}, oracle::oracle_dbscan(m, 0.1, 4)).labels());
  EXPECT_EQ(a.members(1).size(), 3u);
}

TEST(Dbscan, CorePartitionPermutationInvariant) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const auto m = oracle::random_matrix(rng, 40, 3);
    std::vector<std::size_t> perm(40);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<float> raw;
    for (auto p : perm) raw.insert(raw.end(), m.row(p).begin(), m.row(p).end());
    const EmbeddingMatrix pm(3, raw);
    const auto a = dbscan(m, 0.5, 4), b = dbscan(pm, 0.5, 4);
    std::vector<bool> core(40);
    for (std::size_t i = 0; i < 40; ++i) {
      std::size_t nb = 0;
      for (std::size_t j = 0; j < 40; ++j) nb += embedding::squared_distance(m.row(i), m.row(j)) <= 0.25;
      core[i] = nb >= 4;
    }
    // Two core points share a cluster in one ordering iff they do in the other.
    for (std::size_t i = 0; i < 40; ++i) {
      for (std::size_t j = 0; j < 40; ++j) {
        if (!core[perm[i]] || !core[perm[j]]) continue;
        EXPECT_EQ(a.label(perm[i]) == a.label(perm[j]), b.label(i) == b.label(j));
      }
    }
  }
}

// ---- HDBSCAN --------------------------------------------------------------

TEST(Hdbscan, DefaultMinClusterSizeIsFive) { EXPECT_EQ(MethodParams{}.min_cluster_size, 5u); }

TEST(Hdbscan, TwoBlobsThreeOutliers) {
  const auto cases = reference_cases();
  const auto& c = cases.at("cases").at(0);
  ASSERT_EQ(c.at("name"), "blobs23");
  const auto a = hdbscan(matrix_of(c.at("points")), 5);
  EXPECT_EQ(a.num_clusters(), 2u);
  EXPECT_EQ(a.num_noise(), 3u);
}

TEST(Hdbscan, MatchesReferenceLabels) {
  const auto cases = reference_cases();
  for (const auto& c : cases.at("cases")) {
    const auto mcs = c.at("min_cluster_size").get<std::size_t>();
    const ClusterAssignment want({}, c.at("labels").get<std::vector<ClusterId>>());
    const auto got = hdbscan(matrix_of(c.at("points")), mcs);
    EXPECT_EQ(got.labels(), want.labels()) << c.at("name").get<std::string>();
  }
}

TEST(Hdbscan, IdenticalPointsFormOneCluster) {
  const auto m = from_rows({{0, 1, 0}, {0, 1, 0}, {0, 1, 0}, {0, 1, 0}, {0, 1, 0}});
  const auto a = hdbscan(m, 5);
  EXPECT_EQ(a.num_clusters(), 1u);
  EXPECT_EQ(a.num_noise(), 0u);
}

TEST(Hdbscan, Preconditions) {
  const auto m = from_rows({{0, 1}, {1, 0}, {1, 1}});
  EXPECT_THROW(hdbscan(m, 1), DomainError);
  EXPECT_THROW(hdbscan(m, 4), DomainError);
}

TEST(Hdbscan, ClusterSizesRespectMinimumOnFuzzedInputs) {
  std::mt19937_64 rng(9);
  std::normal_distribution<float> g(0.0f, 1.0f);
  for (int t = 0; t < 200; ++t) {
    const std::size_t dim = 2 + rng() % 4, blobs = 1 + rng() % 4, mcs = 2 + rng() % 7;
    std::vector<float> raw;
    for (std::size_t b = 0; b < blobs; ++b) {
      std::vector<float> center(dim);
      for (auto& v : center) v = g(rng);
      const std::size_t n = 2 + rng() % 15;
      const float spread = 0.02f + 0.2f * static_cast<float>(rng() % 100) / 100.0f;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < dim; ++j) raw.push_back(center[j] + spread * g(rng));
      }
    }
    for (std::size_t i = 0; i < rng() % 6 * dim; ++i) raw.push_back(g(rng));
    while (raw.size() / dim < mcs) {
      for (std::size_t j = 0; j < dim; ++j) raw.push_back(g(rng));
    }
    raw.resize(raw.size() / dim * dim);
    const EmbeddingMatrix m(dim, raw);
    const auto a = hdbscan(m, mcs);
    for (const auto& members : a.all_members()) ASSERT_GE(members.size(), mcs) << "case " << t;
    expect_inverse(a);
  }
}

// ---- statistics -----------------------------------------------------------

TEST(Stats, HandArithmetic) {
  const auto s = compute_stats_from_sizes({20, 5, 11});
  EXPECT_EQ(s.total_sentences_clustered, 36u);
  EXPECT_EQ(s.total_clusters, 3u);
  EXPECT_EQ(format_fixed(s.mean_size, 2), "12.00");
  EXPECT_EQ(format_fixed(s.median_size, 1), "11.0");
  EXPECT_EQ(s.min_size, 5u);
  EXPECT_EQ(s.max_size, 20u);
}

TEST(Stats, KMeans5000Arithmetic) {
  // 184,535 sentences in 5,000 clusters.
  std::vector<std::size_t> sizes(5000, 36);
  for (std::size_t i = 0; i < 184535 - 5000 * 36; ++i) sizes[i] += 1;
  const auto s = compute_stats_from_sizes(sizes);
  EXPECT_EQ(s.total_sentences_clustered, 184535u);
  EXPECT_EQ(format_fixed(s.mean_size, 2), "36.91");
}

TEST(Stats, Singleton) {
  const auto s = compute_stats_from_sizes({7});
  EXPECT_EQ(s.mean_size, 7.0);
  EXPECT_EQ(s.median_size, 7.0);
  EXPECT_EQ(s.min_size, 7u);
  EXPECT_EQ(s.max_size, 7u);
}

TEST(Stats, EvenCountMedianAveragesMiddlePair) {
  EXPECT_EQ(compute_stats_from_sizes({5, 6, 10, 12}).median_size, 8.0);
}

TEST(Stats, NoClustersIsAnError) {
  EXPECT_THROW(compute_stats(ClusterAssignment({}, {kNoise, kNoise})), DomainError);
}

TEST(Stats, TableUsesPaperRowNames) {
  ClusterStats s;
  s.total_sentences_clustered = 66477;
  s.total_clusters = 3216;
  s.mean_size = 66477.0 / 3216.0;
  s.median_size = 11.0;
  s.min_size = 5;
  s.max_size = 1522;
  const auto t = format_stats_table(s);
  for (const char* want : {"Total Sentences", "66,477", "3,216", "Average Cluster Size", "20.67",
                           "Median Cluster Size", "11.0", "Min Cluster Size", "Max Cluster Size", "1,522"}) {
    EXPECT_NE(t.find(want), std::string::npos) << want;
  }
}
