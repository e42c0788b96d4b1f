#include <benchmark/benchmark.h>

#include <random>

#include "fenrich/clustering.hpp"

using namespace fenrich;

namespace {

// Gaussian blobs around random centres in `dim` dimensions.
embedding::EmbeddingMatrix blobs(std::size_t n, std::size_t dim, std::size_t centres, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  std::vector<std::vector<float>> c(centres, std::vector<float>(dim));
  for (auto& v : c) {
    for (auto& x : v) x = g(rng);
  }
  std::vector<float> raw;
  raw.reserve(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& base = c[i % centres];
    for (std::size_t j = 0; j < dim; ++j) raw.push_back(base[j] + 0.1f * g(rng));
  }
  return embedding::EmbeddingMatrix(dim, std::move(raw));
}

void BM_KMeans(benchmark::State& state) {
  const auto m = blobs(static_cast<std::size_t>(state.range(0)), 64, 20, 1);
  for (auto _ : state) benchmark::DoNotOptimize(clustering::kmeans(m, 20, 42));
}

void BM_Dbscan(benchmark::State& state) {
  const auto m = blobs(static_cast<std::size_t>(state.range(0)), 64, 20, 2);
  for (auto _ : state) benchmark::DoNotOptimize(clustering::dbscan(m, 0.35, 5));
}

void BM_Hdbscan(benchmark::State& state) {
  const auto m = blobs(static_cast<std::size_t>(state.range(0)), 64, 20, 3);
  for (auto _ : state) benchmark::DoNotOptimize(clustering::hdbscan(m, 5));
}

}  // namespace

BENCHMARK(BM_KMeans)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Dbscan)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Hdbscan)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
