#include "hotreplay/profile.hpp"

#include <algorithm>
#include <map>

namespace hotreplay {

const FunctionProfile* ProfileResult::find(const std::string& name) const {
  for (const auto& f : functions) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

namespace {

struct Extent {
  Vaddr start, end;
  std::string name;
};

}  // namespace

ProfileResult profile(const ProgramImage& img, const BenchmarkManifest& manifest,
                      uint64_t cycle_budget, const CostModel* cost) {
  ProcessState p = load(img, manifest, cost);

  std::vector<Extent> extents;
  for (const auto& [name, info] : img.symbols) {
    extents.push_back({info.addr, info.addr + std::max<uint64_t>(info.size, kInstrBytes), name});
  }
  std::sort(extents.begin(), extents.end(),
            [](const Extent& a, const Extent& b) { return a.start < b.start; });

  auto func_of = [&](Vaddr pc) -> size_t {
    size_t lo = 0, hi = extents.size();
    while (lo < hi) {
      size_t mid = (lo + hi) / 2;
      if (extents[mid].end <= pc) {
        lo = mid + 1;
      } else if (extents[mid].start > pc) {
        hi = mid;
      } else {
        return mid;
      }
    }
    return extents.size();  // outside any known function
  };

  std::vector<uint64_t> exclusive(extents.size() + 1, 0);
  std::vector<uint64_t> inclusive(extents.size() + 1, 0);
  std::vector<uint64_t> invocations(extents.size() + 1, 0);

  struct Frame {
    size_t func;
    uint64_t start_cycles;  // measured right after the call's own cost
  };
  std::vector<Frame> stack;
  size_t entry_fn = func_of(p.regs.pc);
  invocations[entry_fn]++;
  stack.push_back({entry_fn, 0});

  ProfileResult out;
  while (p.status == ProcStatus::Running) {
    if (p.regs.cycles > cycle_budget) {
      out.budget_exceeded = true;
      break;
    }
    Vaddr pc0 = p.regs.pc;
    uint8_t opcode;
    p.space().host_read(pc0, &opcode, 1);
    uint64_t before = p.regs.cycles;
    StepResult r = step(p);
    if (r.kind == StepKind::Faulted) {
      // Profiling runs unprotected; an actual fault ends the run.
      p.halt(ExitInfo::UnhandledFault);
      break;
    }
    exclusive[func_of(pc0)] += p.regs.cycles - before;
    Op op = Op(opcode);
    if (r.kind == StepKind::Continued) {
      if (op == Op::CALLT || op == Op::CALLD) {
        size_t callee = func_of(p.regs.pc);
        invocations[callee]++;
        stack.push_back({callee, p.regs.cycles});
      } else if (op == Op::RET && stack.size() > 1) {
        inclusive[stack.back().func] += p.regs.cycles - stack.back().start_cycles;
        stack.pop_back();
      }
    }
    if (r.kind == StepKind::Halted) break;
  }
  // Close whatever is still open (the entry frame, plus anything aborted).
  while (!stack.empty()) {
    inclusive[stack.back().func] += p.regs.cycles - stack.back().start_cycles;
    stack.pop_back();
  }

  out.total_cycles = p.regs.cycles;
  out.exit = p.exit;
  for (size_t i = 0; i < extents.size(); ++i) {
    if (exclusive[i] == 0 && invocations[i] == 0) continue;
    FunctionProfile fp;
    fp.name = extents[i].name;
    fp.exclusive_cycles = exclusive[i];
    fp.inclusive_cycles = inclusive[i];
    fp.invocations = invocations[i];
    out.functions.push_back(std::move(fp));
  }
  if (exclusive.back() != 0) {
    out.functions.push_back({"<outside>", exclusive.back(), inclusive.back(), invocations.back()});
  }
  std::sort(out.functions.begin(), out.functions.end(), [](const auto& a, const auto& b) {
    if (a.exclusive_cycles != b.exclusive_cycles) return a.exclusive_cycles > b.exclusive_cycles;
    return a.name < b.name;
  });
  return out;
}

}  // namespace hotreplay
