#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hotreplay/benchmarks.hpp"
#include "hotreplay/report.hpp"
#include "hotreplay/search.hpp"

namespace fs = std::filesystem;
using namespace hotreplay;

namespace {

std::string workspace_root(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("HOTREPLAY_WORKSPACE"); env && *env) return env;
  return "workspace";
}

std::string bench_dir(const std::string& root, const std::string& bench) {
  fs::create_directories(root + "/" + bench);
  return root + "/" + bench;
}

int run_bench_list(const std::string& out_root) {
  fs::create_directories(out_root);
  std::string json = "[\n";
  std::printf("%-12s %-12s %12s %14s\n", "benchmark", "hot", "data bytes", "baseline cyc");
  bool first = true;
  for (const auto& name : bench::bundled_names()) {
    search::BenchmarkBuild b = search::prepare_benchmark(name, /*input_seed=*/1);
    ProcessState p = load(b.baseline_image, b.manifest);
    if (run(p, 500'000'000ull) != RunExit::Halted || p.exit != ExitInfo::Ok) {
      std::fprintf(stderr, "%s: baseline run failed\n", name.c_str());
      return 1;
    }
    uint64_t data_bytes = b.manifest.globals_len + b.manifest.heap_len;
    std::printf("%-12s %-12s %12llu %14llu\n", name.c_str(), b.manifest.hot_function.c_str(),
                (unsigned long long)data_bytes, (unsigned long long)p.regs.cycles);
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "  {\"name\":\"%s\",\"hot_function\":\"%s\",\"data_bytes\":%llu,"
                  "\"baseline_cycles\":%llu}",
                  name.c_str(), b.manifest.hot_function.c_str(), (unsigned long long)data_bytes,
                  (unsigned long long)p.regs.cycles);
    if (!first) json += ",\n";
    json += buf;
    first = false;
  }
  json += "\n]\n";
  write_file(out_root + "/benchmarks.json", json);
  return 0;
}

int run_profile(const std::string& bench_name, uint64_t seed, uint64_t budget,
                const std::string& out_root) {
  search::BenchmarkBuild b = search::prepare_benchmark(bench_name, seed);
  ProfileResult prof = profile(b.baseline_image, b.manifest, budget);
  std::printf("%-16s %14s %14s %8s\n", "function", "exclusive", "inclusive", "calls");
  std::string json = "[\n";
  for (size_t i = 0; i < prof.functions.size(); ++i) {
    const auto& f = prof.functions[i];
    std::printf("%-16s %14llu %14llu %8llu\n", f.name.c_str(),
                (unsigned long long)f.exclusive_cycles, (unsigned long long)f.inclusive_cycles,
                (unsigned long long)f.invocations);
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "  {\"function\":\"%s\",\"exclusive\":%llu,\"inclusive\":%llu,\"calls\":%llu}",
                  f.name.c_str(), (unsigned long long)f.exclusive_cycles,
                  (unsigned long long)f.inclusive_cycles, (unsigned long long)f.invocations);
    json += buf;
    json += i + 1 < prof.functions.size() ? ",\n" : "\n";
  }
  json += "]\n";
  std::printf("total: %llu cycles, exit %s\n", (unsigned long long)prof.total_cycles,
              exit_info_name(prof.exit));
  write_file(bench_dir(out_root, bench_name) + "/profile.json", json);
  return prof.exit == ExitInfo::Ok ? 0 : 1;
}

int run_capture(const std::string& bench_name, uint64_t seed, uint64_t budget,
                const std::string& out_root) {
  search::BenchmarkBuild b = search::prepare_benchmark(bench_name, seed);
  search::CaptureOutcome cap = search::capture_once(b, budget);
  std::string dir = bench_dir(out_root, bench_name);
  save_snapshot(cap.snapshot, dir + "/snapshot.hrsn");
  write_file(dir + "/image.hrim", serialize_image(b.baseline_image));

  char buf[512];
  std::snprintf(buf, sizeof buf,
                "{\"benchmark\":\"%s\",\"pages_captured\":%llu,\"fault_count\":%llu,"
                "\"full_state_bytes\":%llu,\"snapshot_bytes\":%llu,\"overhead_cycles\":%llu,"
                "\"normal_cycles\":%llu,\"captured_cycles\":%llu,\"hot_return_value\":%llu,"
                "\"observable_digest\":\"%s\"}\n",
                bench_name.c_str(), (unsigned long long)cap.stats.pages_captured,
                (unsigned long long)cap.stats.fault_count,
                (unsigned long long)cap.stats.full_state_bytes,
                (unsigned long long)cap.stats.snapshot_bytes,
                (unsigned long long)cap.stats.capture_overhead_cycles,
                (unsigned long long)cap.original.normal_cycles,
                (unsigned long long)cap.original.captured_cycles,
                (unsigned long long)cap.original.hot_return_value,
                cap.original.observable_digest_hex.c_str());
  write_file(dir + "/capture.json", std::string(buf));
  std::printf("captured %llu pages (%llu faults), snapshot %llu bytes of %llu mapped (%.2f%%)\n",
              (unsigned long long)cap.stats.pages_captured,
              (unsigned long long)cap.stats.fault_count,
              (unsigned long long)cap.stats.snapshot_bytes,
              (unsigned long long)cap.stats.full_state_bytes,
              100.0 * double(cap.stats.snapshot_bytes) / double(cap.stats.full_state_bytes));
  std::printf("overhead %llu cycles over a %llu-cycle run (%.3f%%)\n",
              (unsigned long long)cap.stats.capture_overhead_cycles,
              (unsigned long long)cap.original.normal_cycles,
              100.0 * double(cap.stats.capture_overhead_cycles) /
                  double(cap.original.normal_cycles));
  std::printf("wrote %s/snapshot.hrsn\n", dir.c_str());
  return 0;
}

int run_replay(const std::string& bench_name, const std::string& set_text, int reps,
               const std::string& noise_text, uint64_t seed, uint64_t budget,
               const std::string& snapshot_path, const std::string& out_root) {
  search::BenchmarkBuild b = search::prepare_benchmark(bench_name, seed);
  std::string dir = bench_dir(out_root, bench_name);
  std::string snap_file = snapshot_path.empty() ? dir + "/snapshot.hrsn" : snapshot_path;

  Snapshot snap;
  if (fs::exists(snap_file)) {
    snap = load_snapshot(snap_file);
    if (snap.layout_digest != layout_digest(b.baseline_image)) {
      throw Error(Error::Code::LayoutMismatch,
                  "snapshot at " + snap_file +
                      " was captured against a different layout; recapture with "
                      "`hotreplay capture` and retry");
    }
  } else {
    std::printf("no snapshot at %s, capturing first\n", snap_file.c_str());
    search::CaptureOutcome cap = search::capture_once(b, budget);
    snap = std::move(cap.snapshot);
    save_snapshot(snap, snap_file);
  }

  opt::TransformationSet set =
      set_text.empty() ? b.baseline_set : opt::set_from_text(b.space, set_text);
  ProgramImage image = search::link_variant(b, set);
  NoiseModel noise = NoiseModel::parse(noise_text);
  Rng rng = Rng::derive(seed, 42);

  std::vector<search::ReplayRecord> records;
  for (int i = 0; i < reps; ++i) {
    ReplayResult r = replay(image, snap, b.manifest, noise, rng, budget, 0);
    search::ReplayRecord rec;
    rec.variant = 0;
    rec.rep = i;
    rec.cycles = r.deterministic_cycles;
    rec.time = r.measured_time;
    rec.digest_hex = Sha256::hex(r.observable_digest);
    rec.status = r.ok ? "ok" : "failed";
    records.push_back(rec);
    if (!r.ok) {
      std::fprintf(stderr, "replay failed: %s\n", exit_info_name(r.exit));
      return 1;
    }
  }
  write_file(dir + "/replays.jsonl", search::replay_records_jsonl(records));
  std::printf("replayed %d time(s): %llu cycles each, first measured time %.1f\n", reps,
              (unsigned long long)records.front().cycles, records.front().time);
  std::printf("wrote %s/replays.jsonl\n", dir.c_str());
  return 0;
}

int run_search_cmd(const std::string& bench_name, int K, int R, uint64_t seed,
                   const std::string& noise_text, int workers, uint64_t budget, int agreement,
                   const std::string& out_root) {
  search::SearchConfig cfg;
  cfg.benchmark = bench_name;
  cfg.variant_count = K;
  cfg.replays_per_variant = R;
  cfg.master_seed = seed;
  cfg.noise = NoiseModel::parse(noise_text);
  cfg.worker_count = workers;
  cfg.cycle_budget = budget;
  cfg.agreement_variants = agreement;

  search::SearchReport rep = search::run_search(cfg);
  std::string dir = bench_dir(out_root, bench_name);
  write_file(dir + "/report.json", search::report_to_json(rep));
  write_file(dir + "/replays.jsonl", search::replay_records_jsonl(rep.replays));
  report::write_figure_csvs({rep}, dir);
  std::fputs(report::human_summary(rep).c_str(), stdout);
  std::printf("wrote %s/report.json\n", dir.c_str());
  return 0;
}

int run_report(const std::vector<std::string>& inputs, const std::string& out_root) {
  std::vector<search::SearchReport> reports;
  for (const auto& path : inputs) {
    std::vector<uint8_t> data = read_file(path);
    reports.push_back(search::report_from_json(std::string(data.begin(), data.end())));
  }
  fs::create_directories(out_root);
  report::write_figure_csvs(reports, out_root);
  std::printf("wrote 5 CSV files to %s from %zu report(s)\n", out_root.c_str(), reports.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capture/replay iterative-compilation workbench"};
  app.require_subcommand(1);

  std::string out_flag;
  uint64_t seed = 1;
  uint64_t budget = 200'000'000ull;
  std::string noise = "gauss:0.01";
  int workers = 4;

  auto* cmd_bench = app.add_subcommand("bench", "list bundled benchmarks");
  cmd_bench->add_option("--out", out_flag, "workspace directory");

  std::string bench_name;
  auto add_common = [&](CLI::App* c) {
    c->add_option("--bench", bench_name, "benchmark name")->required();
    c->add_option("--seed", seed, "master seed");
    c->add_option("--out", out_flag, "workspace directory");
    c->add_option("--budget", budget, "cycle budget per execution");
  };

  auto* cmd_profile = app.add_subcommand("profile", "per-function cycle profile of a full run");
  add_common(cmd_profile);

  auto* cmd_capture = app.add_subcommand("capture", "capture the hot function's first invocation");
  add_common(cmd_capture);

  auto* cmd_replay = app.add_subcommand("replay", "replay a captured invocation against a variant");
  add_common(cmd_replay);
  std::string set_text, snapshot_path;
  int reps = 1;
  cmd_replay->add_option("--set", set_text,
                         "transformation set, e.g. loop-unroll=4,dead-code-elim=on");
  cmd_replay->add_option("--reps", reps, "replay count");
  cmd_replay->add_option("--noise", noise, "off | gauss:SIGMA | spiky:SIGMA,PROB,FACTOR");
  cmd_replay->add_option("--snapshot", snapshot_path, "snapshot file (defaults to workspace)");

  auto* cmd_search = app.add_subcommand("search", "random search over transformation sets");
  add_common(cmd_search);
  int K = 100, R = 10, agreement = 20;
  cmd_search->add_option("-K,--variants", K, "sampled transformation sets");
  cmd_search->add_option("-R,--replays", R, "replays per variant");
  cmd_search->add_option("--noise", noise, "off | gauss:SIGMA | spiky:SIGMA,PROB,FACTOR");
  cmd_search->add_option("--workers", workers, "worker threads");
  cmd_search->add_option("--agreement", agreement, "variants verified against full runs");

  auto* cmd_report = app.add_subcommand("report", "regenerate figure CSVs from report JSON");
  std::vector<std::string> report_inputs;
  cmd_report->add_option("inputs", report_inputs, "report.json files")->required();
  cmd_report->add_option("--out", out_flag, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    std::string root = workspace_root(out_flag);
    if (cmd_bench->parsed()) return run_bench_list(root);
    if (cmd_profile->parsed()) return run_profile(bench_name, seed, budget, root);
    if (cmd_capture->parsed()) return run_capture(bench_name, seed, budget, root);
    if (cmd_replay->parsed())
      return run_replay(bench_name, set_text, reps, noise, seed, budget, snapshot_path, root);
    if (cmd_search->parsed())
      return run_search_cmd(bench_name, K, R, seed, noise, workers, budget, agreement, root);
    if (cmd_report->parsed()) return run_report(report_inputs, root);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code() == Error::Code::Usage ? 2 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  return 2;
}
