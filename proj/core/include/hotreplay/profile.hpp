#pragma once

#include <string>
#include <vector>

#include "hotreplay/image.hpp"

namespace hotreplay {

// Per-function cycle attribution from a full run, tracked through
// CALLT/CALLD/RET. Exclusive cycles sum to the run total; inclusive cycles
// cover a function's dynamic extent including callees, which is what a
// replayed invocation measures.
struct FunctionProfile {
  std::string name;
  uint64_t exclusive_cycles = 0;
  uint64_t inclusive_cycles = 0;
  uint64_t invocations = 0;
};

struct ProfileResult {
  std::vector<FunctionProfile> functions;  // sorted by exclusive cycles, descending
  uint64_t total_cycles = 0;
  ExitInfo exit = ExitInfo::None;
  bool budget_exceeded = false;

  const FunctionProfile* find(const std::string& name) const;
};

ProfileResult profile(const ProgramImage& img, const BenchmarkManifest& manifest,
                      uint64_t cycle_budget, const CostModel* cost = nullptr);

}  // namespace hotreplay
