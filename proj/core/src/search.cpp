#include "hotreplay/search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include <json.hpp>

namespace hotreplay::search {

namespace {

constexpr uint64_t kSampleStream = 0x10'0003;
constexpr uint64_t kInputStream = 0x10'0004;

std::string hex_digest(const Sha256::Digest& d) { return Sha256::hex(d); }

const FunctionObject& hot_object(const BenchmarkManifest& m) {
  for (const auto& o : m.objects) {
    if (o.name == m.hot_function) return o;
  }
  throw Error(Error::Code::Internal, "manifest lost its hot function");
}

std::vector<FunctionObject> link_inputs(const BenchmarkManifest& manifest,
                                        const opt::FlagSpace& space,
                                        const FunctionObject& transformed_hot) {
  std::vector<FunctionObject> objects;
  for (const auto& o : manifest.objects) {
    objects.push_back(o.name == manifest.hot_function ? transformed_hot : o);
  }
  for (auto& h : opt::helper_objects(space)) objects.push_back(std::move(h));
  objects.push_back(opt::make_dummy_caller(space));
  return objects;
}

// Runs to halt while watching the first hot-function invocation. The
// callbacks fire with the process at the invocation boundary.
struct HotWatchResult {
  bool entered = false;
  bool returned = false;
  Word return_value = 0;
  Sha256::Digest digest_at_return{};
  RunExit exit = RunExit::Halted;
};

template <typename OnEntry, typename OnReturn>
HotWatchResult run_with_hot_watch(ProcessState& p, Vaddr hot_entry, const Region& observable,
                                  uint64_t budget, OnEntry on_entry, OnReturn on_return) {
  HotWatchResult w;
  Vaddr ret_addr = 0;
  Vaddr entry_sp = 0;
  while (p.status == ProcStatus::Running) {
    if (!w.entered && p.regs.pc == hot_entry) {
      w.entered = true;
      entry_sp = p.regs.sp;
      ret_addr = p.space().host_read_u64(entry_sp);
      on_entry(p);
    } else if (w.entered && !w.returned && p.regs.pc == ret_addr && p.regs.sp == entry_sp + 8) {
      w.returned = true;
      w.return_value = p.regs.r[0];
      w.digest_at_return = Sha256::of(p.space().host_read(observable.start, observable.length));
      on_return(p);
    }
    if (p.regs.cycles > budget) {
      w.exit = RunExit::BudgetExceeded;
      return w;
    }
    StepResult r = step(p);
    if (r.kind == StepKind::Faulted) {
      if (p.fault_hook) {
        p.regs.cycles += p.cost->fault_dispatch;
        if (p.fault_hook(p, r.fault)) continue;
      }
      p.halt(ExitInfo::UnhandledFault);
      break;
    }
    if (r.kind == StepKind::Halted) break;
  }
  return w;
}

}  // namespace

void SearchConfig::validate() const {
  if (variant_count < 1) throw Error(Error::Code::Usage, "K must be at least 1");
  if (replays_per_variant < 3) {
    throw Error(Error::Code::Usage, "R must be at least 3 (outlier filter needs 3 samples)");
  }
  if (alpha <= 0.0 || alpha >= 1.0) throw Error(Error::Code::Usage, "alpha must be in (0,1)");
  if (worker_count < 1) throw Error(Error::Code::Usage, "worker_count must be at least 1");
}

const char* variant_status_name(VariantStatus s) {
  switch (s) {
    case VariantStatus::Ok: return "ok";
    case VariantStatus::HotRegionOverflow: return "hot-region-overflow";
    case VariantStatus::PassError: return "pass-error";
    case VariantStatus::BudgetExceeded: return "budget-exceeded";
    case VariantStatus::WrongResult: return "wrong-result";
  }
  return "?";
}

BenchmarkBuild prepare_benchmark(const std::string& name, uint64_t input_seed) {
  BenchmarkBuild b;
  b.manifest = bench::make_benchmark(name, input_seed);
  b.space = opt::default_flag_space();
  b.baseline_set = opt::baseline_pipeline(b.space);
  FunctionObject baseline_hot = opt::apply(hot_object(b.manifest), b.baseline_set, b.space);
  b.layout = LayoutSpec{};
  b.layout.hot_region_capacity = default_hot_capacity(baseline_hot.size());
  b.baseline_image = link(link_inputs(b.manifest, b.space, baseline_hot), b.manifest, b.layout,
                          b.baseline_set.canonical_text());
  return b;
}

ProgramImage link_variant(const BenchmarkBuild& build, const opt::TransformationSet& set) {
  FunctionObject transformed = opt::apply(hot_object(build.manifest), set, build.space);
  return link(link_inputs(build.manifest, build.space, transformed), build.manifest, build.layout,
              set.canonical_text());
}

CaptureOutcome capture_once(const BenchmarkBuild& build, uint64_t cycle_budget,
                            const CostModel* cost) {
  const ProgramImage& img = build.baseline_image;
  const BenchmarkManifest& m = build.manifest;

  // Reference run, no capture.
  ProcessState normal = load(img, m, cost);
  HotWatchResult nw = run_with_hot_watch(normal, img.hot_entry, m.observable, cycle_budget,
                                         [](ProcessState&) {}, [](ProcessState&) {});
  if (normal.exit != ExitInfo::Ok) {
    throw Error(Error::Code::Internal, std::string("normal run failed: ") + exit_info_name(normal.exit));
  }
  if (!nw.entered || !nw.returned) {
    throw Error(Error::Code::Internal, "hot function was never invoked");
  }

  // Captured run: arm at first entry, finalize at the matching return.
  ProcessState traced = load(img, m, cost);
  std::unique_ptr<CaptureSession> session;
  std::optional<std::pair<Snapshot, CaptureStats>> captured;
  HotWatchResult cw = run_with_hot_watch(
      traced, img.hot_entry, m.observable, cycle_budget,
      [&](ProcessState& p) {
        session = begin_capture(p, img.hot_entry, layout_digest(img), m.name, m.hot_function);
      },
      [&](ProcessState&) { captured = session->finalize(); });
  if (traced.exit != ExitInfo::Ok || !captured) {
    throw Error(Error::Code::Internal, "captured run failed");
  }

  // Transparency: capture must not change what the program computes.
  if (cw.return_value != nw.return_value || cw.digest_at_return != nw.digest_at_return ||
      traced.regs.r != normal.regs.r) {
    throw Error(Error::Code::Internal, "capture perturbed the architectural results");
  }

  CaptureOutcome out;
  out.snapshot = std::move(captured->first);
  out.stats = captured->second;
  out.original.normal_cycles = normal.regs.cycles;
  out.original.captured_cycles = traced.regs.cycles;
  out.original.hot_return_value = nw.return_value;
  out.original.observable_digest_hex = hex_digest(nw.digest_at_return);
  out.original.final_r0 = normal.regs.r[0];
  return out;
}

EvaluationResult evaluate_variant(const BenchmarkBuild& build, const Snapshot& snapshot,
                                  const opt::TransformationSet& set, int variant_index,
                                  const SearchConfig& config, const EvaluationResult* baseline,
                                  std::vector<ReplayRecord>* records, const CostModel* cost) {
  EvaluationResult ev;
  ev.variant = variant_index;
  ev.set = set;

  ProgramImage image;
  try {
    image = link_variant(build, set);
  } catch (const Error& e) {
    ev.status = e.code() == Error::Code::HotRegionOverflow ? VariantStatus::HotRegionOverflow
                                                           : VariantStatus::PassError;
    ev.failure_reason = e.what();
    return ev;
  }
  ev.hot_code_size = image.hot_size;

  Rng rng = Rng::derive(config.master_seed, uint64_t(variant_index));
  for (int rep = 0; rep < config.replays_per_variant; ++rep) {
    ReplayResult r = replay(image, snapshot, build.manifest, config.noise, rng,
                            config.cycle_budget, variant_index, cost);
    ReplayRecord rec;
    rec.variant = variant_index;
    rec.rep = rep;
    if (!r.ok) {
      ev.status = VariantStatus::BudgetExceeded;
      ev.failure_reason = r.budget_exceeded ? "cycle budget exceeded"
                                            : std::string("replay halted: ") + exit_info_name(r.exit);
      rec.status = variant_status_name(ev.status);
      if (records) records->push_back(std::move(rec));
      return ev;
    }
    rec.cycles = r.deterministic_cycles;
    rec.time = r.measured_time;
    rec.digest_hex = hex_digest(r.observable_digest);
    rec.status = "ok";
    if (records) records->push_back(std::move(rec));

    if (rep == 0) {
      ev.deterministic_cycles = r.deterministic_cycles;
      ev.return_value = r.return_value;
      ev.digest_hex = hex_digest(r.observable_digest);
    }
    ev.raw_times.push_back(r.measured_time);
  }

  stats::MadResult filtered = stats::mad_filter(ev.raw_times, config.mad_threshold);
  ev.filtered_times = filtered.retained;
  ev.mean_time = stats::mean(ev.filtered_times);
  if (baseline) {
    ev.speedup = baseline->mean_time / ev.mean_time;
    ev.matches_baseline_contract =
        ev.return_value == baseline->return_value && ev.digest_hex == baseline->digest_hex;
    if (!ev.matches_baseline_contract) {
      ev.status = VariantStatus::WrongResult;
      ev.failure_reason = "observable contract differs from baseline";
    }
  } else {
    ev.speedup = 1.0;
    ev.matches_baseline_contract = true;
  }
  return ev;
}

void verify_agreement(SearchReport& report, const BenchmarkBuild& build, int n,
                      const CostModel* cost) {
  int done = 0;
  for (const auto& ev : report.variants) {
    if (done >= n) break;
    if (ev.status != VariantStatus::Ok) continue;
    ProgramImage image = link_variant(build, ev.set);
    ProfileResult prof = profile(image, build.manifest, report.config.cycle_budget, cost);
    const FunctionProfile* hot = prof.find(build.manifest.hot_function);
    if (!hot || hot->invocations == 0) {
      throw Error(Error::Code::Internal, "agreement: hot function missing from profile");
    }
    AgreementRow row;
    row.variant = ev.variant;
    row.replay_cycles = ev.deterministic_cycles;
    row.normal_hot_cycles = hot->inclusive_cycles / hot->invocations;
    row.rel_diff = row.normal_hot_cycles == 0
                       ? 0.0
                       : std::fabs(double(row.replay_cycles) - double(row.normal_hot_cycles)) /
                             double(row.normal_hot_cycles);
    report.agreement.push_back(row);
    report.verification_full_runs++;
    ++done;
  }
}

SearchReport run_search(const SearchConfig& config, const CostModel* cost) {
  config.validate();
  if (!bench::is_bundled(config.benchmark)) {
    throw Error(Error::Code::Usage, "unknown benchmark: " + config.benchmark);
  }

  SearchReport report;
  report.benchmark = config.benchmark;
  report.config = config;

  uint64_t input_state = config.master_seed ^ kInputStream;
  uint64_t input_seed = splitmix64(input_state);
  BenchmarkBuild build = prepare_benchmark(config.benchmark, input_seed);

  // Full run 1: profiling. The declared hot function must be a top cycle
  // consumer (entry aside), or the capture target is wrong.
  ProfileResult prof = profile(build.baseline_image, build.manifest, config.cycle_budget, cost);
  if (prof.exit != ExitInfo::Ok) {
    throw Error(Error::Code::Internal, "baseline profile run failed");
  }
  {
    std::vector<const FunctionProfile*> ranked;
    for (const auto& f : prof.functions) {
      if (f.name != build.manifest.entry_function) ranked.push_back(&f);
    }
    std::sort(ranked.begin(), ranked.end(), [](const FunctionProfile* a, const FunctionProfile* b) {
      return a->inclusive_cycles > b->inclusive_cycles;
    });
    bool found = false;
    for (size_t i = 0; i < ranked.size() && i < 3; ++i) {
      found = found || ranked[i]->name == build.manifest.hot_function;
    }
    if (!found) {
      throw Error(Error::Code::Internal,
                  "declared hot function is not among the top cycle consumers");
    }
  }
  const FunctionProfile* hot_prof = prof.find(build.manifest.hot_function);
  report.search_full_runs = 1;

  // Full runs 2+3: reference and captured executions.
  CaptureOutcome cap = capture_once(build, config.cycle_budget, cost);
  report.search_full_runs += 2;
  report.capture = cap.stats;
  report.original = cap.original;
  report.original.hot_invocations = hot_prof->invocations;
  report.original.hot_inclusive_cycles = hot_prof->inclusive_cycles;

  // Baseline evaluation (variant 0) via replay, like everything else.
  std::vector<ReplayRecord> baseline_records;
  report.baseline = evaluate_variant(build, cap.snapshot, build.baseline_set, 0, config, nullptr,
                                     &baseline_records, cost);
  if (report.baseline.status != VariantStatus::Ok) {
    throw Error(Error::Code::Internal, "baseline replay failed: " + report.baseline.failure_reason);
  }
  if (report.baseline.digest_hex != report.original.observable_digest_hex ||
      report.baseline.return_value != report.original.hot_return_value) {
    throw Error(Error::Code::Internal, "baseline replay does not reproduce the original run");
  }

  // Sample all K sets up front from one stream, independent of scheduling.
  Rng sample_rng = Rng::derive(config.master_seed, kSampleStream);
  std::vector<opt::TransformationSet> sets;
  sets.reserve(size_t(config.variant_count));
  for (int k = 0; k < config.variant_count; ++k) sets.push_back(opt::sample_set(build.space, sample_rng));

  report.variants.assign(size_t(config.variant_count), {});
  std::vector<std::vector<ReplayRecord>> records(size_t(config.variant_count));

  std::atomic<int> next{0};
  auto worker = [&] {
    while (true) {
      int k = next.fetch_add(1);
      if (k >= config.variant_count) return;
      report.variants[size_t(k)] =
          evaluate_variant(build, cap.snapshot, sets[size_t(k)], k + 1, config, &report.baseline,
                           &records[size_t(k)], cost);
    }
  };
  {
    std::vector<std::thread> pool;
    int n = std::min(config.worker_count, config.variant_count);
    pool.reserve(size_t(n));
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  report.replays = std::move(baseline_records);
  for (auto& rv : records) {
    report.replays.insert(report.replays.end(), rv.begin(), rv.end());
  }

  // Selection and distribution over successful variants.
  std::vector<stats::Evaluation> evals;
  std::vector<double> speedups;
  for (const auto& ev : report.variants) {
    if (ev.status != VariantStatus::Ok) continue;
    evals.push_back({ev.variant, ev.filtered_times, ev.mean_time});
    speedups.push_back(ev.speedup);
  }
  if (!evals.empty()) {
    stats::Selection sel = stats::select_best(evals, config.alpha);
    report.best_variant = sel.best_variant;
    const EvaluationResult& best = report.variants[size_t(sel.best_variant - 1)];
    report.best_speedup = best.speedup;
    report.best_set = best.set.canonical_text();

    std::vector<double> sorted = speedups;
    std::sort(sorted.begin(), sorted.end());
    report.min_speedup = sorted.front();
    report.max_speedup = sorted.back();
    report.median_speedup = stats::median(sorted);
    size_t below = 0;
    for (double s : sorted) below += s < 1.0 ? 1 : 0;
    report.fraction_below_one = double(below) / double(sorted.size());
  }

  report.replays_per_execution =
      double(report.original.normal_cycles) /
      double(report.baseline.deterministic_cycles +
             replay_setup_cycles(cost ? *cost : default_cost_model(), cap.snapshot.pages.size()));

  if (config.agreement_variants > 0) {
    verify_agreement(report, build, config.agreement_variants, cost);
  }
  return report;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

nlohmann::json set_to_json(const opt::TransformationSet& set) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& a : set.assignments) {
    j.push_back({{"flag", a.flag}, {"value", a.value}, {"drawn", a.drawn}});
  }
  return j;
}

opt::TransformationSet set_from_json(const nlohmann::json& j) {
  opt::TransformationSet set;
  for (const auto& e : j) {
    set.assignments.push_back(
        {e.at("flag").get<std::string>(), e.at("value").get<std::string>(), e.at("drawn").get<bool>()});
  }
  return set;
}

nlohmann::json eval_to_json(const EvaluationResult& ev) {
  nlohmann::json j;
  j["variant"] = ev.variant;
  j["set"] = set_to_json(ev.set);
  j["set_text"] = ev.set.canonical_text();
  j["status"] = variant_status_name(ev.status);
  if (!ev.failure_reason.empty()) j["failure_reason"] = ev.failure_reason;
  j["cycles"] = ev.deterministic_cycles;
  j["hot_code_size"] = ev.hot_code_size;
  j["raw_times"] = ev.raw_times;
  j["filtered_times"] = ev.filtered_times;
  j["mean_time"] = ev.mean_time;
  j["speedup"] = ev.speedup;
  j["return_value"] = ev.return_value;
  j["digest"] = ev.digest_hex;
  j["contract_ok"] = ev.matches_baseline_contract;
  return j;
}

EvaluationResult eval_from_json(const nlohmann::json& j) {
  EvaluationResult ev;
  ev.variant = j.at("variant").get<int>();
  ev.set = set_from_json(j.at("set"));
  std::string st = j.at("status").get<std::string>();
  for (int s = 0; s <= int(VariantStatus::WrongResult); ++s) {
    if (st == variant_status_name(VariantStatus(s))) ev.status = VariantStatus(s);
  }
  ev.failure_reason = j.value("failure_reason", "");
  ev.deterministic_cycles = j.at("cycles").get<uint64_t>();
  ev.hot_code_size = j.at("hot_code_size").get<uint64_t>();
  ev.raw_times = j.at("raw_times").get<std::vector<double>>();
  ev.filtered_times = j.at("filtered_times").get<std::vector<double>>();
  ev.mean_time = j.at("mean_time").get<double>();
  ev.speedup = j.at("speedup").get<double>();
  ev.return_value = j.at("return_value").get<uint64_t>();
  ev.digest_hex = j.at("digest").get<std::string>();
  ev.matches_baseline_contract = j.at("contract_ok").get<bool>();
  return ev;
}

}  // namespace

std::string report_to_json(const SearchReport& report) {
  nlohmann::json j;
  j["schema"] = report.schema;
  j["benchmark"] = report.benchmark;
  j["config"] = {
      {"K", report.config.variant_count},
      {"R", report.config.replays_per_variant},
      {"alpha", report.config.alpha},
      {"noise", report.config.noise.to_string()},
      {"seed", report.config.master_seed},
      {"budget", report.config.cycle_budget},
      {"agreement_variants", report.config.agreement_variants},
      {"mad_threshold", report.config.mad_threshold},
  };
  j["original"] = {
      {"normal_cycles", report.original.normal_cycles},
      {"captured_cycles", report.original.captured_cycles},
      {"hot_return_value", report.original.hot_return_value},
      {"observable_digest", report.original.observable_digest_hex},
      {"final_r0", report.original.final_r0},
      {"hot_invocations", report.original.hot_invocations},
      {"hot_inclusive_cycles", report.original.hot_inclusive_cycles},
  };
  j["capture"] = {
      {"pages_captured", report.capture.pages_captured},
      {"fault_count", report.capture.fault_count},
      {"full_state_bytes", report.capture.full_state_bytes},
      {"snapshot_bytes", report.capture.snapshot_bytes},
      {"overhead_cycles", report.capture.capture_overhead_cycles},
      {"vma_cycles", report.capture.vma_cycles},
      {"fork_cycles", report.capture.fork_cycles},
  };
  j["baseline"] = eval_to_json(report.baseline);
  j["variants"] = nlohmann::json::array();
  for (const auto& ev : report.variants) j["variants"].push_back(eval_to_json(ev));
  j["replays"] = nlohmann::json::array();
  for (const auto& r : report.replays) {
    j["replays"].push_back({{"variant", r.variant},
                            {"rep", r.rep},
                            {"cycles", r.cycles},
                            {"time", r.time},
                            {"digest", r.digest_hex},
                            {"status", r.status}});
  }
  j["best"] = {
      {"variant", report.best_variant},
      {"speedup", report.best_speedup},
      {"set_text", report.best_set},
  };
  j["distribution"] = {
      {"min_speedup", report.min_speedup},
      {"median_speedup", report.median_speedup},
      {"max_speedup", report.max_speedup},
      {"fraction_below_one", report.fraction_below_one},
  };
  j["replays_per_execution"] = report.replays_per_execution;
  j["agreement"] = nlohmann::json::array();
  for (const auto& a : report.agreement) {
    j["agreement"].push_back({{"variant", a.variant},
                              {"replay_cycles", a.replay_cycles},
                              {"normal_hot_cycles", a.normal_hot_cycles},
                              {"rel_diff", a.rel_diff}});
  }
  j["search_full_runs"] = report.search_full_runs;
  j["verification_full_runs"] = report.verification_full_runs;
  return j.dump(2) + "\n";
}

SearchReport report_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("schema").get<int>() != 1) {
    throw Error(Error::Code::BadVersion, "unsupported report schema");
  }
  SearchReport r;
  r.benchmark = j.at("benchmark").get<std::string>();
  const auto& c = j.at("config");
  r.config.benchmark = r.benchmark;
  r.config.variant_count = c.at("K").get<int>();
  r.config.replays_per_variant = c.at("R").get<int>();
  r.config.alpha = c.at("alpha").get<double>();
  r.config.noise = NoiseModel::parse(c.at("noise").get<std::string>());
  r.config.master_seed = c.at("seed").get<uint64_t>();
  r.config.cycle_budget = c.at("budget").get<uint64_t>();
  r.config.agreement_variants = c.at("agreement_variants").get<int>();
  r.config.mad_threshold = c.at("mad_threshold").get<double>();
  const auto& o = j.at("original");
  r.original.normal_cycles = o.at("normal_cycles").get<uint64_t>();
  r.original.captured_cycles = o.at("captured_cycles").get<uint64_t>();
  r.original.hot_return_value = o.at("hot_return_value").get<uint64_t>();
  r.original.observable_digest_hex = o.at("observable_digest").get<std::string>();
  r.original.final_r0 = o.at("final_r0").get<uint64_t>();
  r.original.hot_invocations = o.at("hot_invocations").get<uint64_t>();
  r.original.hot_inclusive_cycles = o.at("hot_inclusive_cycles").get<uint64_t>();
  const auto& cp = j.at("capture");
  r.capture.pages_captured = cp.at("pages_captured").get<uint64_t>();
  r.capture.fault_count = cp.at("fault_count").get<uint64_t>();
  r.capture.full_state_bytes = cp.at("full_state_bytes").get<uint64_t>();
  r.capture.snapshot_bytes = cp.at("snapshot_bytes").get<uint64_t>();
  r.capture.capture_overhead_cycles = cp.at("overhead_cycles").get<uint64_t>();
  r.capture.vma_cycles = cp.at("vma_cycles").get<uint64_t>();
  r.capture.fork_cycles = cp.at("fork_cycles").get<uint64_t>();
  r.baseline = eval_from_json(j.at("baseline"));
  for (const auto& e : j.at("variants")) r.variants.push_back(eval_from_json(e));
  for (const auto& e : j.at("replays")) {
    ReplayRecord rec;
    rec.variant = e.at("variant").get<int>();
    rec.rep = e.at("rep").get<int>();
    rec.cycles = e.at("cycles").get<uint64_t>();
    rec.time = e.at("time").get<double>();
    rec.digest_hex = e.at("digest").get<std::string>();
    rec.status = e.at("status").get<std::string>();
    r.replays.push_back(std::move(rec));
  }
  r.best_variant = j.at("best").at("variant").get<int>();
  r.best_speedup = j.at("best").at("speedup").get<double>();
  r.best_set = j.at("best").at("set_text").get<std::string>();
  const auto& d = j.at("distribution");
  r.min_speedup = d.at("min_speedup").get<double>();
  r.median_speedup = d.at("median_speedup").get<double>();
  r.max_speedup = d.at("max_speedup").get<double>();
  r.fraction_below_one = d.at("fraction_below_one").get<double>();
  r.replays_per_execution = j.at("replays_per_execution").get<double>();
  for (const auto& e : j.at("agreement")) {
    AgreementRow row;
    row.variant = e.at("variant").get<int>();
    row.replay_cycles = e.at("replay_cycles").get<uint64_t>();
    row.normal_hot_cycles = e.at("normal_hot_cycles").get<uint64_t>();
    row.rel_diff = e.at("rel_diff").get<double>();
    r.agreement.push_back(row);
  }
  r.search_full_runs = j.at("search_full_runs").get<int>();
  r.verification_full_runs = j.at("verification_full_runs").get<int>();
  return r;
}

std::string replay_records_jsonl(const std::vector<ReplayRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::json j = {{"variant", r.variant}, {"rep", r.rep},       {"cycles", r.cycles},
                        {"time", r.time},       {"digest", r.digest_hex}, {"status", r.status}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace hotreplay::search
