#include <benchmark/benchmark.h>

#include "rbmc/chain.hpp"
#include "rbmc/diagnostics.hpp"
#include "rbmc/generator.hpp"
#include "rbmc/linalg.hpp"
#include "rbmc/partition.hpp"
#include "rbmc/rng.hpp"

using namespace rbmc;

namespace {

linalg::Matrix random_matrix(int r, int c, std::uint64_t seed) {
  RngStream rng(seed, "bench-mat");
  linalg::Matrix m(r, c);
  for (auto& v : m.a) v = 2.0 * rng.u01() - 1.0;
  return m;
}

Partition disk_partition(int n, int mc) {
  const Domain ball = Domain::ball(make_point(0, 0), 1.0, 2);
  RngStream rng(1, "bench-sites", static_cast<std::uint64_t>(n));
  const auto sites = ball.sample_uniform(n, rng);
  RngStream rng2(1, "bench-mc", static_cast<std::uint64_t>(n));
  Partition part = build_voronoi_partition(ball, sites, mc, rng2);
  assign_scales(part, 0.35, 0.6);
  return part;
}

void BM_Pseudoinverse(benchmark::State& state) {
  const auto a = random_matrix(static_cast<int>(state.range(0)),
                               static_cast<int>(state.range(1)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::pseudoinverse(a));
}
BENCHMARK(BM_Pseudoinverse)->Args({2, 64})->Args({3, 256})->Args({8, 64});

void BM_VoronoiBuild(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(disk_partition(n, 200));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_VoronoiBuild)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_AssembleGenerator(benchmark::State& state) {
  const Partition part = disk_partition(static_cast<int>(state.range(0)), 200);
  for (auto _ : state) benchmark::DoNotOptimize(assemble(part));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(part.size()));
}
BENCHMARK(BM_AssembleGenerator)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_ChainSimulate(benchmark::State& state) {
  const Partition part = disk_partition(1000, 200);
  const GeneratorTable gen = assemble(part);
  const ChainSampler sampler(gen);
  const int start = part.nearest_site(make_point(0, 0));
  std::uint64_t r = 0;
  for (auto _ : state) {
    RngStream rng(9, "bench-sim", r++);
    benchmark::DoNotOptimize(sampler.simulate(start, 0.5, rng));
  }
}
BENCHMARK(BM_ChainSimulate);

void BM_EnergyDistance(benchmark::State& state) {
  const Domain ball = Domain::ball(make_point(0, 0), 1.0, 2);
  RngStream ra(5, "bench-ea"), rb(5, "bench-eb");
  const auto a = ball.sample_uniform(static_cast<int>(state.range(0)), ra);
  const auto b = ball.sample_uniform(static_cast<int>(state.range(0)), rb);
  for (auto _ : state) benchmark::DoNotOptimize(two_sample_distance(a, b, 2));
}
BENCHMARK(BM_EnergyDistance)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_ConsistencyError(benchmark::State& state) {
  const Partition part = disk_partition(1000, 200);
  const GeneratorTable gen = assemble(part);
  const auto fs = test_functions(part.domain);
  for (auto _ : state) benchmark::DoNotOptimize(consistency_error(gen, part, fs[0]));
}
BENCHMARK(BM_ConsistencyError)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
