#pragma once

#include <string>

#include "hotreplay/capture.hpp"
#include "hotreplay/image.hpp"
#include "hotreplay/rng.hpp"

namespace hotreplay {

// Multiplicative timing noise. Deterministic cycle counts stay exact; the
// measured time is cycles scaled by a reproducible per-draw multiplier, so
// relative noise is scale-free across benchmarks.
struct NoiseModel {
  enum class Kind : uint8_t { Off = 0, Gaussian = 1, GaussianWithSpikes = 2 };
  Kind kind = Kind::Off;
  double sigma = 0.0;
  double spike_prob = 0.0;
  double spike_factor = 1.0;

  static NoiseModel off() { return {}; }
  static NoiseModel gaussian(double sigma) { return {Kind::Gaussian, sigma, 0.0, 1.0}; }
  static NoiseModel spiky(double sigma, double prob, double factor) {
    return {Kind::GaussianWithSpikes, sigma, prob, factor};
  }

  // "off" | "gauss:SIGMA" | "spiky:SIGMA,PROB,FACTOR"
  static NoiseModel parse(const std::string& text);
  std::string to_string() const;
};

double measure(uint64_t cycles, const NoiseModel& noise, Rng& rng);

struct ReplayResult {
  uint64_t deterministic_cycles = 0;
  double measured_time = 0.0;
  Word return_value = 0;
  Sha256::Digest observable_digest{};
  int variant_id = 0;
  bool ok = false;
  bool budget_exceeded = false;
  ExitInfo exit = ExitInfo::None;
};

// Re-executes the captured invocation against any layout-compatible image:
// fresh process from the image's code, snapshot pages written over the data
// segments, registers restored, and the return-address slot redirected to a
// reserved HALT stub so the function runs to completion and stops.
//
// Throws Error::LayoutMismatch when the image's layout digest differs from
// the snapshot's.
ReplayResult replay(const ProgramImage& img, const Snapshot& snap,
                    const BenchmarkManifest& manifest, const NoiseModel& noise, Rng& rng,
                    uint64_t cycle_budget, int variant_id = 0, const CostModel* cost = nullptr);

// Modeled cost of staging one replay.
uint64_t replay_setup_cycles(const CostModel& m, uint64_t snapshot_pages);

// How many replays fit in one full execution:
//   full-run cycles / (replay cycles + replay setup cost).
double replays_per_full_execution(const ProgramImage& img, const Snapshot& snap,
                                  const BenchmarkManifest& manifest, uint64_t cycle_budget,
                                  const CostModel* cost = nullptr);

}  // namespace hotreplay
