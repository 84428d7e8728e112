#include <benchmark/benchmark.h>

#include "repeaterlab/fock.hpp"
#include "repeaterlab/optics.hpp"
#include "repeaterlab/rates.hpp"
#include "repeaterlab/sim.hpp"

using namespace repeaterlab;

namespace {

ProtocolParams with_n(int n) {
  ProtocolParams p = paper_defaults();
  p.n = n;
  return p;
}

void BM_LocalPipeline(benchmark::State& state) {
  const ProtocolParams p = paper_defaults();
  for (auto _ : state) {
    benchmark::DoNotOptimize(optics::local_entanglement_pipeline(p, {0.3}, {1.2}));
  }
}
BENCHMARK(BM_LocalPipeline);

void BM_LinkPipeline(benchmark::State& state) {
  const ProtocolParams p = paper_defaults();
  for (auto _ : state) benchmark::DoNotOptimize(optics::link_pipeline(p));
}
BENCHMARK(BM_LinkPipeline);

void BM_SwapPipeline(benchmark::State& state) {
  const ProtocolParams p = paper_defaults();
  for (auto _ : state) benchmark::DoNotOptimize(optics::swap_pipeline(p));
}
BENCHMARK(BM_SwapPipeline);

void BM_TotalTime(benchmark::State& state) {
  const ProtocolParams p = paper_defaults();
  for (auto _ : state) benchmark::DoNotOptimize(rates::t_total(p));
}
BENCHMARK(BM_TotalTime);

void BM_OptimalLinks(benchmark::State& state) {
  const ProtocolParams p = paper_defaults();
  for (auto _ : state) benchmark::DoNotOptimize(rates::optimal_n(p, 1, 10));
}
BENCHMARK(BM_OptimalLinks);

void BM_DarkStateResidual(benchmark::State& state) {
  const int atoms = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fock::dark_state_residual(1.3, 0.7, atoms));
}
BENCHMARK(BM_DarkStateResidual)->DenseRange(1, 4);

void BM_SimulateTrial(benchmark::State& state) {
  const sim::StageModel model = sim::StageModel::from_params(with_n(static_cast<int>(state.range(0))));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sim::simulate_trial(model, {}, ++seed));
}
BENCHMARK(BM_SimulateTrial)->DenseRange(0, 6, 2);

void BM_Estimate(benchmark::State& state) {
  const ProtocolParams p = with_n(4);
  const auto trials = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sim::estimate(p, {}, trials, 11));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Estimate)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
