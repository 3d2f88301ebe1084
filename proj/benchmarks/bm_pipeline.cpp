#include <benchmark/benchmark.h>

#include "hotreplay/rng.hpp"
#include "hotreplay/search.hpp"
#include "hotreplay/stats.hpp"

using namespace hotreplay;

namespace {

void BM_capture(benchmark::State& state) {
  search::BenchmarkBuild build = search::prepare_benchmark(state.range(0) == 0 ? "fir" : "fft", 1);
  for (auto _ : state) {
    search::CaptureOutcome cap = search::capture_once(build, 500'000'000ull);
    benchmark::DoNotOptimize(cap.stats.pages_captured);
  }
}
BENCHMARK(BM_capture)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_replay(benchmark::State& state) {
  search::BenchmarkBuild build =
      search::prepare_benchmark(state.range(0) == 0 ? "divloop" : "fir", 1);
  search::CaptureOutcome cap = search::capture_once(build, 500'000'000ull);
  Rng rng(1);
  for (auto _ : state) {
    ReplayResult r = replay(build.baseline_image, cap.snapshot, build.manifest,
                            NoiseModel::off(), rng, 500'000'000ull, 0);
    benchmark::DoNotOptimize(r.deterministic_cycles);
  }
}
BENCHMARK(BM_replay)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_apply_and_link(benchmark::State& state) {
  search::BenchmarkBuild build = search::prepare_benchmark("fft", 1);
  Rng rng(9);
  std::vector<opt::TransformationSet> sets;
  for (int i = 0; i < 64; ++i) sets.push_back(opt::sample_set(build.space, rng));
  size_t i = 0;
  for (auto _ : state) {
    try {
      ProgramImage img = search::link_variant(build, sets[i++ % sets.size()]);
      benchmark::DoNotOptimize(img.hot_size);
    } catch (const Error&) {
      // over-capacity variants count as work too
    }
  }
}
BENCHMARK(BM_apply_and_link)->Unit(benchmark::kMicrosecond);

void BM_mad_filter(benchmark::State& state) {
  Rng rng(5);
  std::vector<double> xs;
  for (int i = 0; i < state.range(0); ++i) xs.push_back(100 + rng.gaussian());
  xs[0] += 400;
  for (auto _ : state) {
    auto r = stats::mad_filter(xs);
    benchmark::DoNotOptimize(r.retained.size());
  }
}
BENCHMARK(BM_mad_filter)->Arg(10)->Arg(100);

void BM_t_test(benchmark::State& state) {
  Rng rng(6);
  std::vector<double> a, b;
  for (int i = 0; i < 10; ++i) {
    a.push_back(100 + rng.gaussian());
    b.push_back(101 + rng.gaussian());
  }
  for (auto _ : state) {
    stats::TTestReport r = stats::t_test(a, b);
    benchmark::DoNotOptimize(r.p_value);
  }
}
BENCHMARK(BM_t_test);

}  // namespace

BENCHMARK_MAIN();
