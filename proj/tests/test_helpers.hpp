#pragma once

#include <map>
#include <set>
#include <vector>

#include "hotreplay/asm.hpp"
#include "hotreplay/vm.hpp"

// Shared fixtures and independent oracles for the test suites. Oracles here
// never reuse the mechanism they check: cost accounting is recomputed from
// execution traces, COW is checked against eager full copies, access sets
// against a tracing observer.

namespace hotreplay::testing {

// A bare process around a raw instruction sequence (no image, no linker).
// Code at 0x1000, one data region at 0x10000, stack on top.
struct RawProcess {
  static constexpr Vaddr kCode = 0x1000;
  static constexpr Vaddr kData = 0x10000;
  static constexpr Vaddr kStack = 0x40000;

  ProcessState proc;

  explicit RawProcess(const std::vector<Instruction>& prog, uint64_t data_pages = 4,
                      uint64_t stack_pages = 2) {
    std::vector<uint8_t> code = encode_all(prog);
    Region code_region{kCode, pages_for(std::max<uint64_t>(code.size(), 1)) * kPageSize,
                       RegionKind::Code};
    proc.space().map_region_bytes(code_region, code);
    proc.space().map_region({kData, data_pages * kPageSize, RegionKind::Heap});
    proc.space().map_region({kStack, stack_pages * kPageSize, RegionKind::Stack});
    proc.regs.pc = kCode;
    proc.regs.sp = kStack + stack_pages * kPageSize - 64;
  }
};

// Records every executed instruction and memory access.
struct TraceOracle : TraceSink {
  struct Exec {
    Vaddr pc;
    uint8_t opcode;
    uint64_t cycles_after;
  };
  struct Mem {
    Vaddr addr;
    uint32_t len;
    bool write;
  };
  std::vector<Exec> execs;
  std::vector<Mem> mems;

  void on_exec(Vaddr pc, uint8_t opcode, uint64_t cycles_after) override {
    execs.push_back({pc, opcode, cycles_after});
  }
  void on_mem(Vaddr addr, uint32_t len, bool write) override { mems.push_back({addr, len, write}); }

  // Independent cost recomputation: per-instruction base costs plus the
  // store->load stall; fetch penalties are asserted separately where used.
  uint64_t recomputed_cycles(const CostModel& m) const {
    uint64_t total = 0;
    uint8_t prev = 0;
    for (const auto& e : execs) {
      total += instr_cost(m, Op(e.opcode));
      if (Op(e.opcode) == Op::LD && Op(prev) == Op::ST) total += m.store_load_stall;
      prev = e.opcode;
    }
    return total;
  }

  std::set<uint64_t> touched_pages() const {
    std::set<uint64_t> pages;
    for (const auto& a : mems) {
      for (Vaddr p = page_base(a.addr); p < a.addr + a.len; p += kPageSize) {
        pages.insert(page_of(p));
      }
    }
    return pages;
  }
};

// Byte-for-byte copy of every mapped page (the eager-fork oracle).
inline std::map<uint64_t, std::vector<uint8_t>> eager_copy(const ProcessState& p) {
  std::map<uint64_t, std::vector<uint8_t>> out;
  for (const Region& r : p.space().regions()) {
    for (Vaddr a = r.start; a < r.end(); a += kPageSize) {
      out[page_of(a)] = p.space().host_read(a, kPageSize);
    }
  }
  return out;
}

}  // namespace hotreplay::testing
