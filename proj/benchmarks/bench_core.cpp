#include <benchmark/benchmark.h>

#include "flowlab/checker.hpp"
#include "flowlab/rng.hpp"
#include "flowlab/sim.hpp"
#include "flowlab/sobol.hpp"
#include "flowlab/zoo.hpp"

using namespace flowlab;

namespace {

void BM_PhiloxNormal(benchmark::State& state) {
  uint64_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rng::normal(42, 7, i++));
  }
}
BENCHMARK(BM_PhiloxNormal);

void BM_InverseNormalCdf(benchmark::State& state) {
  double u = 0.0001;
  for (auto _ : state) {
    u += 1e-7;
    if (u >= 1.0) u = 0.0001;
    benchmark::DoNotOptimize(rng::inverse_normal_cdf(u));
  }
}
BENCHMARK(BM_InverseNormalCdf);

void BM_SobolPoint(benchmark::State& state) {
  SobolSequence seq(static_cast<int>(state.range(0)));
  double pt[32];
  for (auto _ : state) {
    seq.next(pt);
    benchmark::DoNotOptimize(pt[0]);
  }
}
BENCHMARK(BM_SobolPoint)->Arg(4)->Arg(13);

void BM_FlowStepOU(benchmark::State& state) {
  const NamedModel& nm = model_by_name("ou");
  FlowGrid grid;
  grid.anchors = {{0.0, Vec::Constant(1, 1.0)}};
  grid.time_step = 1.0 / 256;
  grid.n_paths = state.range(0);
  grid.record_times = {1.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_flow(nm.spec, grid, 42));
  }
  state.SetItemsProcessed(state.iterations() * grid.n_paths * 256);
}
BENCHMARK(BM_FlowStepOU)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_FlowStepLorenzTamed(benchmark::State& state) {
  const NamedModel& nm = model_by_name("lorenz_stochastic");
  FlowGrid grid;
  grid.anchors = {{0.0, Vec::Constant(3, 1.0)}};
  grid.time_step = 1.0 / 256;
  grid.scheme = Scheme::tamed_euler;
  grid.n_paths = state.range(0);
  grid.record_times = {1.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_flow(nm.spec, grid, 42));
  }
  state.SetItemsProcessed(state.iterations() * grid.n_paths * 256);
}
BENCHMARK(BM_FlowStepLorenzTamed)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_MonotonicityMarginC1(benchmark::State& state) {
  const NamedModel& nm = model_by_name("ginzburg_landau");
  const Vec x = Vec::Constant(1, 0.7), y = Vec::Constant(1, -1.3), h = Vec::Constant(1, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(monotonicity_margin_c1(nm.spec, 0.25, x, y, h));
  }
}
BENCHMARK(BM_MonotonicityMarginC1);

void BM_CertifyOU(benchmark::State& state) {
  const NamedModel& nm = model_by_name("ou");
  SampleRegion region;
  region.box_lo = nm.box_lo;
  region.box_hi = nm.box_hi;
  region.n_points = 128;
  for (auto _ : state) {
    benchmark::DoNotOptimize(certify(nm.spec, region, 42));
  }
  state.SetLabel("128 points x 7 condition families");
}
BENCHMARK(BM_CertifyOU)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
