#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "fenrich/embedding.hpp"

using namespace fenrich;

namespace {

void BM_FallbackEmbed(benchmark::State& state) {
  const std::string s = "there is no pleural effusion or pneumothorax identified";
  for (auto _ : state) benchmark::DoNotOptimize(embedding::fallback_embed(s, embedding::kDefaultDim, 42));
}

void BM_NearestClustered(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<float> g(0.0f, 1.0f);
  std::vector<float> raw(n * embedding::kDefaultDim);
  for (auto& v : raw) v = g(rng);
  const embedding::EmbeddingMatrix m(embedding::kDefaultDim, std::move(raw));
  const std::vector<bool> mask(n, true);
  const auto q = embedding::fallback_embed("no pleural effusion", embedding::kDefaultDim, 42);
  for (auto _ : state) benchmark::DoNotOptimize(embedding::nearest_clustered_sentence(q, m, mask));
}

}  // namespace

BENCHMARK(BM_FallbackEmbed);
BENCHMARK(BM_NearestClustered)->Arg(1000)->Arg(20000)->Unit(benchmark::kMicrosecond);
