#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hotreplay/benchmarks.hpp"
#include "hotreplay/capture.hpp"
#include "hotreplay/optimizer.hpp"
#include "hotreplay/profile.hpp"
#include "hotreplay/replay.hpp"
#include "hotreplay/stats.hpp"

namespace hotreplay::search {

struct SearchConfig {
  std::string benchmark;
  int variant_count = 100;       // K
  int replays_per_variant = 10;  // R, >= 3 for the outlier filter
  double alpha = 0.05;
  NoiseModel noise = NoiseModel::gaussian(0.01);
  uint64_t master_seed = 1;
  int worker_count = 4;          // never part of the result
  uint64_t cycle_budget = 200'000'000ull;
  int agreement_variants = 20;   // post-search replay-vs-normal verification
  double mad_threshold = 3.0;

  void validate() const;
};

enum class VariantStatus : uint8_t {
  Ok = 0,
  HotRegionOverflow,
  PassError,
  BudgetExceeded,
  WrongResult,
};
const char* variant_status_name(VariantStatus s);

struct ReplayRecord {
  int variant = 0;
  int rep = 0;
  uint64_t cycles = 0;
  double time = 0.0;
  std::string digest_hex;
  std::string status;
};

struct EvaluationResult {
  int variant = 0;  // 0 = baseline pipeline, 1..K sampled
  opt::TransformationSet set;
  VariantStatus status = VariantStatus::Ok;
  std::string failure_reason;
  uint64_t deterministic_cycles = 0;
  uint64_t hot_code_size = 0;
  std::vector<double> raw_times;
  std::vector<double> filtered_times;
  double mean_time = 0.0;
  double speedup = 0.0;  // baseline_mean / mean_time, successes only
  Word return_value = 0;
  std::string digest_hex;
  bool matches_baseline_contract = false;
};

// What the capture run observed; the ground truth replays are checked
// against.
struct OriginalRun {
  uint64_t normal_cycles = 0;
  uint64_t captured_cycles = 0;
  Word hot_return_value = 0;
  std::string observable_digest_hex;
  Word final_r0 = 0;
  uint64_t hot_invocations = 0;
  uint64_t hot_inclusive_cycles = 0;  // from profiling, all invocations
};

struct AgreementRow {
  int variant = 0;
  uint64_t replay_cycles = 0;
  uint64_t normal_hot_cycles = 0;  // per-invocation, from full-run profiling
  double rel_diff = 0.0;
};

struct SearchReport {
  int schema = 1;
  std::string benchmark;
  SearchConfig config;
  OriginalRun original;
  CaptureStats capture;
  EvaluationResult baseline;
  std::vector<EvaluationResult> variants;  // by variant index
  std::vector<ReplayRecord> replays;
  int best_variant = -1;                   // select_best over successes
  double best_speedup = 0.0;
  std::string best_set;
  double min_speedup = 0.0, median_speedup = 0.0, max_speedup = 0.0;
  double fraction_below_one = 0.0;
  double replays_per_execution = 0.0;
  std::vector<AgreementRow> agreement;
  int search_full_runs = 0;        // full executions the search itself needed
  int verification_full_runs = 0;  // post-search agreement runs
};

struct CaptureOutcome {
  Snapshot snapshot;
  CaptureStats stats;
  OriginalRun original;
};

// Builds the baseline image for a benchmark (baseline pipeline applied to
// the hot function, helpers + dummy caller linked in, default layout).
struct BenchmarkBuild {
  BenchmarkManifest manifest;
  opt::FlagSpace space;
  LayoutSpec layout;
  ProgramImage baseline_image;
  opt::TransformationSet baseline_set;
};
BenchmarkBuild prepare_benchmark(const std::string& name, uint64_t input_seed);

// Links one variant against the shared layout. Throws the usual link
// errors (overflow, unresolved).
ProgramImage link_variant(const BenchmarkBuild& build, const opt::TransformationSet& set);

// Runs the benchmark once normally and once under capture, arming at the
// first hot-function invocation. The two runs must agree on every
// architectural output; the cycle difference is the capture overhead.
CaptureOutcome capture_once(const BenchmarkBuild& build, uint64_t cycle_budget,
                            const CostModel* cost = nullptr);

// Applies, links and replays one sampled set R times. Failures are
// recorded in the result, never thrown.
EvaluationResult evaluate_variant(const BenchmarkBuild& build, const Snapshot& snapshot,
                                  const opt::TransformationSet& set, int variant_index,
                                  const SearchConfig& config, const EvaluationResult* baseline,
                                  std::vector<ReplayRecord>* records,
                                  const CostModel* cost = nullptr);

// The full pipeline: profile, capture, sample K sets, evaluate each with R
// replays under the noise model, filter, select the best, and verify
// replay-vs-normal agreement on a sample of variants. Deterministic in
// (benchmark, config, master_seed); worker scheduling cannot change any
// byte of the report.
SearchReport run_search(const SearchConfig& config, const CostModel* cost = nullptr);

// Post-search verification used for the agreement report: rebuilds the
// first n successful variants and compares replayed cycles against
// per-invocation hot cycles from full-run profiling.
void verify_agreement(SearchReport& report, const BenchmarkBuild& build, int n,
                      const CostModel* cost = nullptr);

std::string report_to_json(const SearchReport& report);
SearchReport report_from_json(const std::string& text);
std::string replay_records_jsonl(const std::vector<ReplayRecord>& records);

}  // namespace hotreplay::search
