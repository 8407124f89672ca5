#include <benchmark/benchmark.h>

#include "spintomo/mle.hpp"

using namespace spintomo;

namespace {

Exec mode(const benchmark::State& state) { return state.range(0) ? Exec::parallel : Exec::serial; }

void BM_SimulateHistogram(benchmark::State& state) {
  MeasurementConfig cfg;
  cfg.shots = 200000;
  const auto s = SpinState::dicke(2);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_histogram(s, cfg, mode(state)));
  state.SetItemsProcessed(state.iterations() * cfg.shots);
}

void BM_KernelMatrix(benchmark::State& state) {
  const BinGeometry geom{400, 6.0};
  for (auto _ : state) benchmark::DoNotOptimize(build_kernel_matrix(40, 0.5, geom, BinRule::gauss_legendre, mode(state)));
}

void BM_SelectModel(benchmark::State& state) {
  MeasurementConfig cfg;
  const auto h = simulate_histogram(SpinState::squeezed_vacuum(1.0), cfg);
  for (auto _ : state) benchmark::DoNotOptimize(select_model(h, 0.5, kDefaultKMax, {}, mode(state)));
}

}  // namespace

BENCHMARK(BM_SimulateHistogram)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_KernelMatrix)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SelectModel)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime()->Iterations(2);

BENCHMARK_MAIN();
