#include <benchmark/benchmark.h>

#include <random>

#include "fenrich/enrichment.hpp"

using namespace fenrich;

namespace {

// All clusters positive; B symmetric with the given edge density, so the
// candidate graph of F = {0} is a G(n, p) random graph.
struct Instance {
  graph::AddabilityMatrix b;
  signing::SignMap signs;
};

Instance make_instance(std::size_t candidates, double density, std::uint64_t seed) {
  const std::size_t k = candidates + 1;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution edge(density);
  std::vector<std::vector<bool>> adj(k, std::vector<bool>(k, false));
  for (std::size_t i = 1; i < k; ++i) {
    adj[0][i] = adj[i][0] = true;
    for (std::size_t j = i + 1; j < k; ++j) adj[i][j] = adj[j][i] = edge(rng);
  }
  Instance inst{graph::AddabilityMatrix(k, 0.0, 0), {}};
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (adj[i][j]) inst.b.set(static_cast<ClusterId>(i), static_cast<ClusterId>(j));
    }
    inst.signs.signs.push_back(Sign::kPositive);
    inst.signs.provenance.push_back(signing::Provenance::kManual);
    inst.signs.representative.push_back(0);
  }
  return inst;
}

void run(benchmark::State& state, enrichment::Enumerator e) {
  const auto inst = make_instance(static_cast<std::size_t>(state.range(0)), 0.5, 1);
  enrichment::EnumerationOptions opts;
  opts.enumerator = e;
  const enrichment::FindingSet f({0});
  std::size_t found = 0;
  for (auto _ : state) {
    auto r = enrichment::enumerate_largest(f, inst.b, inst.signs, opts);
    found = r.size();
    benchmark::DoNotOptimize(r);
  }
  state.counters["maximal_sets"] = static_cast<double>(found);
}

void BM_BronKerbosch(benchmark::State& state) { run(state, enrichment::Enumerator::kBronKerbosch); }
void BM_ExpandPrune(benchmark::State& state) { run(state, enrichment::Enumerator::kExpandPrune); }

}  // namespace

BENCHMARK(BM_BronKerbosch)->Arg(8)->Arg(16)->Arg(24)->Arg(32)->Arg(48)->Arg(64)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ExpandPrune)->Arg(8)->Arg(12)->Arg(16)->Unit(benchmark::kMicrosecond);
