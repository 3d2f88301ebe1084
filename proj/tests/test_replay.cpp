#include <doctest.h>

#include <cmath>

#include "hotreplay/replay.hpp"
#include "hotreplay/search.hpp"

using namespace hotreplay;

TEST_CASE("noise model parsing round-trips") {
  CHECK(NoiseModel::parse("off").kind == NoiseModel::Kind::Off);
  NoiseModel g = NoiseModel::parse("gauss:0.05");
  CHECK(g.kind == NoiseModel::Kind::Gaussian);
  CHECK(g.sigma == 0.05);
  NoiseModel s = NoiseModel::parse("spiky:0.01,0.02,3");
  CHECK(s.kind == NoiseModel::Kind::GaussianWithSpikes);
  CHECK(s.spike_prob == 0.02);
  CHECK(s.spike_factor == 3.0);
  CHECK(NoiseModel::parse(g.to_string()).sigma == g.sigma);
  CHECK_THROWS_AS(NoiseModel::parse("banana"), Error);
}

TEST_CASE("measure: off is the identity") {
  Rng rng(1);
  CHECK(measure(123456, NoiseModel::off(), rng) == 123456.0);
}

TEST_CASE("measure: gaussian multiplier centers on the true cycles") {
  Rng rng(77);
  NoiseModel g = NoiseModel::gaussian(0.01);
  const uint64_t cycles = 1'000'000;
  double sum = 0;
  const int n = 10'000;
  for (int i = 0; i < n; ++i) sum += measure(cycles, g, rng);
  double mean = sum / n;
  CHECK(std::fabs(mean - double(cycles)) / double(cycles) < 0.005);
}

TEST_CASE("measure: spike fraction matches the configured probability") {
  Rng rng(78);
  NoiseModel s = NoiseModel::spiky(0.01, 0.02, 3.0);
  const uint64_t cycles = 1'000'000;
  const int n = 10'000;
  int spikes = 0;
  for (int i = 0; i < n; ++i) {
    double m = measure(cycles, s, rng) / double(cycles);
    if (m > 2.0) ++spikes;
  }
  double frac = double(spikes) / n;
  CHECK(frac > 0.015);
  CHECK(frac < 0.025);
}

TEST_CASE("replaying the baseline against its own capture reproduces the original run") {
  search::BenchmarkBuild b = search::prepare_benchmark("fir", 11);
  search::CaptureOutcome cap = search::capture_once(b, 200'000'000ull);
  Rng rng(0);
  ReplayResult r =
      replay(b.baseline_image, cap.snapshot, b.manifest, NoiseModel::off(), rng, 200'000'000ull, 0);
  REQUIRE(r.ok);
  CHECK(r.return_value == cap.original.hot_return_value);
  CHECK(Sha256::hex(r.observable_digest) == cap.original.observable_digest_hex);
  CHECK(r.measured_time == double(r.deterministic_cycles));
}

TEST_CASE("replay is bit-deterministic with noise off") {
  search::BenchmarkBuild b = search::prepare_benchmark("divloop", 5);
  search::CaptureOutcome cap = search::capture_once(b, 200'000'000ull);
  Rng rng1(3), rng2(3);
  ReplayResult a =
      replay(b.baseline_image, cap.snapshot, b.manifest, NoiseModel::off(), rng1, 200'000'000ull, 7);
  ReplayResult c =
      replay(b.baseline_image, cap.snapshot, b.manifest, NoiseModel::off(), rng2, 200'000'000ull, 7);
  CHECK(a.deterministic_cycles == c.deterministic_cycles);
  CHECK(a.return_value == c.return_value);
  CHECK(a.observable_digest == c.observable_digest);
  CHECK(a.measured_time == c.measured_time);
  CHECK(a.variant_id == 7);
}

TEST_CASE("replay refuses a layout-incompatible snapshot") {
  search::BenchmarkBuild b = search::prepare_benchmark("divloop", 5);
  search::CaptureOutcome cap = search::capture_once(b, 200'000'000ull);
  Snapshot stale = cap.snapshot;
  stale.layout_digest[0] ^= 1;
  Rng rng(0);
  try {
    replay(b.baseline_image, stale, b.manifest, NoiseModel::off(), rng, 200'000'000ull, 0);
    FAIL("expected LayoutMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Error::Code::LayoutMismatch);
  }
}

TEST_CASE("replay under a starvation budget reports failure, not garbage") {
  search::BenchmarkBuild b = search::prepare_benchmark("fir", 11);
  search::CaptureOutcome cap = search::capture_once(b, 200'000'000ull);
  Rng rng(0);
  ReplayResult r = replay(b.baseline_image, cap.snapshot, b.manifest, NoiseModel::off(), rng,
                          /*budget=*/1'000, 0);
  CHECK_FALSE(r.ok);
  CHECK(r.budget_exceeded);
}

TEST_CASE("replayed cycles equal the per-invocation inclusive profile cycles") {
  // The deterministic strengthening of replay/normal agreement, on two
  // differently shaped benchmarks (leaf hot, callee-heavy hot).
  for (const char* name : {"fir", "divloop"}) {
    search::BenchmarkBuild b = search::prepare_benchmark(name, 9);
    search::CaptureOutcome cap = search::capture_once(b, 200'000'000ull);
    ProfileResult prof = profile(b.baseline_image, b.manifest, 200'000'000ull);
    const FunctionProfile* hot = prof.find(b.manifest.hot_function);
    REQUIRE(hot);
    REQUIRE(hot->inclusive_cycles % hot->invocations == 0);
    Rng rng(0);
    ReplayResult r = replay(b.baseline_image, cap.snapshot, b.manifest, NoiseModel::off(), rng,
                            200'000'000ull, 0);
    REQUIRE(r.ok);
    CHECK(r.deterministic_cycles == hot->inclusive_cycles / hot->invocations);
  }
}

TEST_CASE("replays-per-execution: single-invocation-dominant vs one-percent hot") {
  search::BenchmarkBuild sort = search::prepare_benchmark("bubblesort", 4);
  search::CaptureOutcome sort_cap = search::capture_once(sort, 200'000'000ull);
  double sort_ratio =
      replays_per_full_execution(sort.baseline_image, sort_cap.snapshot, sort.manifest,
                                 200'000'000ull);
  CHECK(sort_ratio > 0.9);
  CHECK(sort_ratio < 1.1);

  search::BenchmarkBuild dl = search::prepare_benchmark("divloop", 4);
  search::CaptureOutcome dl_cap = search::capture_once(dl, 200'000'000ull);
  double dl_ratio =
      replays_per_full_execution(dl.baseline_image, dl_cap.snapshot, dl.manifest, 200'000'000ull);
  CHECK(dl_ratio > 95.0);
  CHECK(dl_ratio < 105.0);

  // the ratio is built from deterministic cycles; recomputing cannot move it
  CHECK(dl_ratio ==
        replays_per_full_execution(dl.baseline_image, dl_cap.snapshot, dl.manifest, 200'000'000ull));
}
