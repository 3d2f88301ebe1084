#include "hotreplay/report.hpp"

#include <cstdio>

namespace hotreplay::report {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string num(uint64_t v) { return std::to_string(v); }

}  // namespace

std::vector<FigureData> figure_csvs(const std::vector<search::SearchReport>& reports) {
  std::string speedups = "benchmark,variant,status,cycles,mean_time,speedup\n";
  std::string agreement = "benchmark,variant,replay_cycles,normal_hot_cycles,rel_diff\n";
  std::string overhead =
      "benchmark,normal_cycles,captured_cycles,overhead_cycles,overhead_ratio\n";
  std::string storage = "benchmark,full_state_bytes,snapshot_bytes,savings_ratio,snapshot_percent\n";
  std::string replays = "benchmark,replays_per_execution\n";

  for (const auto& r : reports) {
    for (const auto& ev : r.variants) {
      speedups += r.benchmark + "," + std::to_string(ev.variant) + "," +
                  search::variant_status_name(ev.status) + "," + num(ev.deterministic_cycles) +
                  "," + num(ev.mean_time) + "," + num(ev.speedup) + "\n";
    }
    for (const auto& a : r.agreement) {
      agreement += r.benchmark + "," + std::to_string(a.variant) + "," + num(a.replay_cycles) +
                   "," + num(a.normal_hot_cycles) + "," + num(a.rel_diff) + "\n";
    }
    double ratio = r.original.normal_cycles == 0
                       ? 0.0
                       : double(r.capture.capture_overhead_cycles) / double(r.original.normal_cycles);
    overhead += r.benchmark + "," + num(r.original.normal_cycles) + "," +
                num(r.original.captured_cycles) + "," + num(r.capture.capture_overhead_cycles) +
                "," + num(ratio) + "\n";
    double savings = r.capture.snapshot_bytes == 0
                         ? 0.0
                         : double(r.capture.full_state_bytes) / double(r.capture.snapshot_bytes);
    double pct = r.capture.full_state_bytes == 0
                     ? 0.0
                     : 100.0 * double(r.capture.snapshot_bytes) / double(r.capture.full_state_bytes);
    storage += r.benchmark + "," + num(r.capture.full_state_bytes) + "," +
               num(r.capture.snapshot_bytes) + "," + num(savings) + "," + num(pct) + "\n";
    replays += r.benchmark + "," + num(r.replays_per_execution) + "\n";
  }

  return {
      {"speedups.csv", speedups},
      {"agreement.csv", agreement},
      {"overhead.csv", overhead},
      {"storage.csv", storage},
      {"replays_per_exec.csv", replays},
  };
}

void write_figure_csvs(const std::vector<search::SearchReport>& reports,
                       const std::string& out_dir) {
  for (const auto& f : figure_csvs(reports)) {
    write_file(out_dir + "/" + f.filename, f.csv);
  }
}

std::string human_summary(const search::SearchReport& r) {
  char buf[512];
  std::string out;
  out += "benchmark: " + r.benchmark + "\n";
  std::snprintf(buf, sizeof buf, "baseline: %llu cycles (replayed), %llu cycles full run\n",
                (unsigned long long)r.baseline.deterministic_cycles,
                (unsigned long long)r.original.normal_cycles);
  out += buf;
  int ok = 0, failed = 0;
  for (const auto& ev : r.variants) (ev.status == search::VariantStatus::Ok ? ok : failed)++;
  std::snprintf(buf, sizeof buf, "variants: %d ok, %d rejected\n", ok, failed);
  out += buf;
  if (r.best_variant >= 0) {
    std::snprintf(buf, sizeof buf, "best: variant %d, speedup %.4f\n  %s\n", r.best_variant,
                  r.best_speedup, r.best_set.c_str());
    out += buf;
  }
  std::snprintf(buf, sizeof buf,
                "speedup min/median/max: %.4f / %.4f / %.4f  (%.0f%% below 1.0)\n",
                r.min_speedup, r.median_speedup, r.max_speedup, 100.0 * r.fraction_below_one);
  out += buf;
  std::snprintf(buf, sizeof buf, "capture: %llu pages, %llu faults, %llu B snapshot (%.2f%% of %llu B)\n",
                (unsigned long long)r.capture.pages_captured,
                (unsigned long long)r.capture.fault_count,
                (unsigned long long)r.capture.snapshot_bytes,
                r.capture.full_state_bytes
                    ? 100.0 * double(r.capture.snapshot_bytes) / double(r.capture.full_state_bytes)
                    : 0.0,
                (unsigned long long)r.capture.full_state_bytes);
  out += buf;
  std::snprintf(buf, sizeof buf, "capture overhead: %llu cycles (%.3f%% of normal run)\n",
                (unsigned long long)r.capture.capture_overhead_cycles,
                r.original.normal_cycles
                    ? 100.0 * double(r.capture.capture_overhead_cycles) /
                          double(r.original.normal_cycles)
                    : 0.0);
  out += buf;
  std::snprintf(buf, sizeof buf, "replays per full execution: %.2f\n", r.replays_per_execution);
  out += buf;
  return out;
}

}  // namespace hotreplay::report
