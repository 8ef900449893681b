// Serial reference against the OpenMP batch on the Case Study 2.1 design.
#include <benchmark/benchmark.h>

#include "mamsim/config.hpp"
#include "mamsim/montecarlo.hpp"

using namespace mamsim;

namespace {

const ValidatedSpec& design() {
  static const ValidatedSpec spec =
      validate_spec(load_spec_file(MAMSIM_DESIGNS_DIR "/case_study_2_1.json"));
  return spec;
}

void BM_Serial(benchmark::State& state) {
  const auto seeds = seeds_from_count(static_cast<std::uint64_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_batch_serial(design(), seeds));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Parallel(benchmark::State& state) {
  const auto seeds = seeds_from_count(static_cast<std::uint64_t>(state.range(0)));
  const int workers = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(run_batch(design(), seeds, workers));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_Serial)->Arg(64)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Parallel)
    ->Args({64, 1})
    ->Args({64, 2})
    ->Args({64, 4})
    ->Args({64, 8})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

BENCHMARK_MAIN();
