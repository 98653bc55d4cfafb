// Serial reference versus OpenMP batch runner on the reference deployment,
// plus the linear-network sweep.
#include <benchmark/benchmark.h>

#include "mrmesh/config.hpp"
#include "mrmesh/experiment.hpp"
#include "mrmesh/linear_analysis.hpp"

namespace {

mrmesh::ExperimentConfig batch_config(double r_a, std::uint64_t runs, int threads) {
  mrmesh::ExperimentConfig cfg;
  cfg.deployment.radius_m = r_a;
  cfg.runs = runs;
  cfg.threads = threads;
  cfg.verify_runs = false;
  return cfg;
}

void BM_BatchSerial(benchmark::State& state) {
  const auto cfg = batch_config(static_cast<double>(state.range(0)), 200, 1);
  for (auto _ : state) {
    auto result = mrmesh::experiment::run_batch_serial(cfg);
    benchmark::DoNotOptimize(result.stats.converged_runs);
  }
  state.SetItemsProcessed(state.iterations() * 200);
}

void BM_BatchOpenMP(benchmark::State& state) {
  const auto cfg = batch_config(static_cast<double>(state.range(0)), 200,
                                static_cast<int>(state.range(1)));
  for (auto _ : state) {
    auto result = mrmesh::experiment::run_batch(cfg);
    benchmark::DoNotOptimize(result.stats.converged_runs);
  }
  state.SetItemsProcessed(state.iterations() * 200);
}

void BM_LinearSweep(benchmark::State& state) {
  const mrmesh::ExperimentConfig cfg;
  const auto grid = cfg.d_min_grid.values();
  for (auto _ : state) {
    auto rows = mrmesh::linear::figure4_sweep(grid, cfg.rho, cfg.short_rat, cfg.long_rat,
                                              cfg.channel);
    benchmark::DoNotOptimize(rows.data());
  }
}

}  // namespace

BENCHMARK(BM_BatchSerial)->Arg(500)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BatchOpenMP)
    ->ArgsProduct({{500, 1000, 2000}, {2, 4, 8}})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();
BENCHMARK(BM_LinearSweep)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
