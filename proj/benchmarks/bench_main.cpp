#include <benchmark/benchmark.h>

#include "rwl/chain_analysis.hpp"
#include "rwl/data.hpp"
#include "rwl/graph.hpp"
#include "rwl/kernels.hpp"
#include "rwl/walker.hpp"

using namespace rwl;

namespace {

ProblemInstance ring_instance(std::size_t n) {
  DataParams p;
  p.heterogeneous = true;
  p.p_high = 2.0 / static_cast<double>(n);
  return gen_heterogeneous(build_ring(n), p);
}

void BM_BuildWeightedMh(benchmark::State& state) {
  const auto inst = ring_instance(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_weighted_mh(inst.graph(), inst.lipschitz()));
}
BENCHMARK(BM_BuildWeightedMh)->Arg(200)->Arg(1000);

void BM_BuildMhlj(benchmark::State& state) {
  const auto inst = ring_instance(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(build_mhlj_matrix(inst.graph(), inst.lipschitz(), {0.1, 0.5, 10}));
}
BENCHMARK(BM_BuildMhlj)->Arg(200)->Arg(1000);

void BM_SpectralGap(benchmark::State& state) {
  const auto inst = ring_instance(static_cast<std::size_t>(state.range(0)));
  const auto mh = build_weighted_mh(inst.graph(), inst.lipschitz());
  const auto mhlj = build_mhlj_matrix(inst.graph(), inst.lipschitz(), {0.1, 0.5, 10});
  const auto& k = state.range(1) ? mhlj : mh;
  for (auto _ : state) benchmark::DoNotOptimize(spectral_gap(k));
}
BENCHMARK(BM_SpectralGap)->Args({200, 0})->Args({200, 1})->Unit(benchmark::kMillisecond);

void BM_StationaryPowerIteration(benchmark::State& state) {
  const auto inst = ring_instance(200);
  const auto k = build_mhlj_matrix(inst.graph(), inst.lipschitz(), {0.1, 0.5, 10});
  for (auto _ : state) benchmark::DoNotOptimize(stationary_distribution(k.matrix));
}
BENCHMARK(BM_StationaryPowerIteration)->Unit(benchmark::kMillisecond);

void BM_MhStep(benchmark::State& state) {
  const auto inst = ring_instance(1000);
  const auto s = MhSampler::weighted(inst.graph(), inst.lipschitz());
  Rng rng(1);
  NodeId v = 0;
  for (auto _ : state) benchmark::DoNotOptimize(v = s.step(v, rng));
}
BENCHMARK(BM_MhStep);

void BM_LevyJump(benchmark::State& state) {
  const Graph g = build_ring(1000);
  const LevySampler s(g, 0.5, 10);
  Rng rng(1);
  NodeId v = 0;
  for (auto _ : state) benchmark::DoNotOptimize(v = s.jump(v, rng).destination);
}
BENCHMARK(BM_LevyJump);

void BM_WalkerRun(benchmark::State& state) {
  const auto inst = ring_instance(200);
  TrainerConfig cfg;
  cfg.strategy.kind = static_cast<StrategyKind>(state.range(0));
  cfg.iterations = 10000;
  cfg.record_every = 100;
  cfg.keep_visit_log = false;
  const Walker w(inst, cfg);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(w.run(++seed));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * cfg.iterations));
}
BENCHMARK(BM_WalkerRun)
    ->Arg(static_cast<int>(StrategyKind::unif_rw))
    ->Arg(static_cast<int>(StrategyKind::weight_rw))
    ->Arg(static_cast<int>(StrategyKind::mhlj))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
