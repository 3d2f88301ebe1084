#include "hotreplay/replay.hpp"

#include <cmath>
#include <cstdio>

namespace hotreplay {

NoiseModel NoiseModel::parse(const std::string& text) {
  if (text == "off" || text.empty()) return off();
  auto colon = text.find(':');
  std::string kind = text.substr(0, colon);
  std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "gauss") {
    double sigma = 0.0;
    if (std::sscanf(args.c_str(), "%lf", &sigma) != 1) {
      throw Error(Error::Code::Usage, "noise: expected gauss:SIGMA");
    }
    return gaussian(sigma);
  }
  if (kind == "spiky") {
    double sigma = 0.0, prob = 0.0, factor = 1.0;
    if (std::sscanf(args.c_str(), "%lf,%lf,%lf", &sigma, &prob, &factor) != 3) {
      throw Error(Error::Code::Usage, "noise: expected spiky:SIGMA,PROB,FACTOR");
    }
    return spiky(sigma, prob, factor);
  }
  throw Error(Error::Code::Usage, "unknown noise model: " + text);
}

std::string NoiseModel::to_string() const {
  char buf[96];
  switch (kind) {
    case Kind::Off: return "off";
    case Kind::Gaussian:
      std::snprintf(buf, sizeof buf, "gauss:%g", sigma);
      return buf;
    case Kind::GaussianWithSpikes:
      std::snprintf(buf, sizeof buf, "spiky:%g,%g,%g", sigma, spike_prob, spike_factor);
      return buf;
  }
  return "off";
}

double measure(uint64_t cycles, const NoiseModel& noise, Rng& rng) {
  if (noise.kind == NoiseModel::Kind::Off) return double(cycles);
  double m = 1.0 + noise.sigma * rng.gaussian();
  if (noise.kind == NoiseModel::Kind::GaussianWithSpikes && rng.uniform() < noise.spike_prob) {
    m *= noise.spike_factor;
  }
  if (m < 1e-9) m = 1e-9;  // multiplier stays positive
  return double(cycles) * m;
}

uint64_t replay_setup_cycles(const CostModel& m, uint64_t snapshot_pages) {
  return m.replay_setup_base + m.replay_setup_per_page * snapshot_pages;
}

ReplayResult replay(const ProgramImage& img, const Snapshot& snap,
                    const BenchmarkManifest& manifest, const NoiseModel& noise, Rng& rng,
                    uint64_t cycle_budget, int variant_id, const CostModel* cost) {
  if (layout_digest(img) != snap.layout_digest) {
    throw Error(Error::Code::LayoutMismatch,
                "image layout does not match the snapshot's capture-time layout");
  }
  const CostModel* cm = cost ? cost : &default_cost_model();

  // Fresh process from the image's code; data regions start zeroed and
  // receive exactly the captured pages.
  auto store = std::make_shared<FrameStore>();
  AddressSpace space(store);
  for (const auto& s : img.segments) {
    if (s.region.kind == RegionKind::Code) {
      space.map_region_bytes(s.region, s.bytes);
      space.set_protection(s.region.start, s.region.length, Protection::Read);
    } else {
      space.map_region(s.region);
    }
  }
  for (const auto& [vpn, bytes] : snap.pages) {
    space.host_write(vpn * kPageSize, bytes);
  }

  ProcessState p(std::move(space));
  p.cost = cm;
  p.regs = snap.entry_registers;
  p.regs.cycles = 0;
  p.call_table_base = img.layout.call_table_base;
  p.call_table_slots = uint32_t(img.call_table.slots.size());
  p.big_functions = big_function_extents(img, *cm);

  if (p.regs.pc != img.hot_entry) {
    throw Error(Error::Code::LayoutMismatch, "snapshot entry pc is not the image's hot entry");
  }

  // Sentinel return: the slot holding the captured return address now
  // points at the reserved HALT stub, so the invocation runs to completion
  // and the process stops.
  p.space().host_write_u64(p.regs.sp, img.symbol(kReplayHaltSymbol).addr);

  RunExit rx = run(p, cycle_budget);

  ReplayResult res;
  res.variant_id = variant_id;
  res.exit = p.exit;
  if (rx == RunExit::BudgetExceeded) {
    res.budget_exceeded = true;
    res.ok = false;
    return res;
  }
  res.ok = p.exit == ExitInfo::Ok;
  if (!res.ok) return res;

  // The stub's own HALT is staging, not hot-function work.
  res.deterministic_cycles = p.regs.cycles - cm->base;
  res.return_value = p.regs.r[0];
  std::vector<uint8_t> window =
      p.space().host_read(manifest.observable.start, manifest.observable.length);
  res.observable_digest = Sha256::of(window);
  res.measured_time = measure(res.deterministic_cycles, noise, rng);
  return res;
}

double replays_per_full_execution(const ProgramImage& img, const Snapshot& snap,
                                  const BenchmarkManifest& manifest, uint64_t cycle_budget,
                                  const CostModel* cost) {
  const CostModel* cm = cost ? cost : &default_cost_model();
  ProcessState full = load(img, manifest, cm);
  if (run(full, cycle_budget) != RunExit::Halted || full.exit != ExitInfo::Ok) {
    throw Error(Error::Code::Internal, "full run did not halt cleanly");
  }
  Rng rng(0);
  ReplayResult r = replay(img, snap, manifest, NoiseModel::off(), rng, cycle_budget, 0, cm);
  if (!r.ok) throw Error(Error::Code::Internal, "replay failed");
  uint64_t denom = r.deterministic_cycles + replay_setup_cycles(*cm, snap.pages.size());
  return double(full.regs.cycles) / double(denom);
}

}  // namespace hotreplay
