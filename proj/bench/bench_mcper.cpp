// Compares the OpenMP table kernel against the serial path and against the
// pointwise reference estimators on a representative placement.

#include <benchmark/benchmark.h>

#include "twr/mcper.hpp"
#include "twr/placement.hpp"

namespace {

using namespace twr;

SimModel make_model() {
  SimModel model;
  model.link = default_80211g_link_model();
  return model;
}

NodePlacement make_placement() {
  Rect region{0, 0, 200, 200};
  return generate_placements_fixed(region, 40, 60, 1, 7).placements[0];
}

void bm_tables_serial(benchmark::State& state) {
  SimModel model = make_model();
  NodePlacement placement = make_placement();
  StreamRng base(42);
  int trials = static_cast<int>(state.range(0));
  for (auto _ : state) {
    PerTables t = compute_per_tables(model, placement, trials, base, Exec::serial);
    benchmark::DoNotOptimize(t.joint_p12.data());
  }
}

void bm_tables_parallel(benchmark::State& state) {
  SimModel model = make_model();
  NodePlacement placement = make_placement();
  StreamRng base(42);
  int trials = static_cast<int>(state.range(0));
  for (auto _ : state) {
    PerTables t = compute_per_tables(model, placement, trials, base, Exec::parallel);
    benchmark::DoNotOptimize(t.joint_p12.data());
  }
}

void bm_pointwise_hr(benchmark::State& state) {
  SimModel model = make_model();
  NodePlacement placement = make_placement();
  StreamRng base(42);
  int trials = static_cast<int>(state.range(0));
  for (auto _ : state) {
    PerEstimate e = estimate_rdstc_hr(model, placement, 24e6, 24e6, 12e6, 12e6, trials, base);
    benchmark::DoNotOptimize(e.p12);
  }
}

BENCHMARK(bm_tables_serial)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_tables_parallel)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_pointwise_hr)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
