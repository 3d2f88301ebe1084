#include <benchmark/benchmark.h>

#include "hotreplay/asm.hpp"
#include "hotreplay/vm.hpp"

using namespace hotreplay;

namespace {

// Counted ALU loop; reports interpreted guest cycles per second.
ProcessState make_loop_process(int64_t iters) {
  FunctionBuilder b("loop");
  auto loop = b.make_label();
  b.ldi(1, 0);
  b.ldi(2, 0);
  b.ldi64(3, uint64_t(iters));
  b.bind(loop);
  b.addi(1, 1, 3);
  b.xori(1, 1, 0x55);
  b.addi(2, 2, 1);
  b.blt(2, 3, loop);
  b.halt();
  FunctionObject fo = b.finish();

  ProcessState p;
  p.space().map_region_bytes({0x1000, pages_for(fo.code.size()) * kPageSize, RegionKind::Code},
                             fo.code);
  p.space().map_region({0x10000, 4 * kPageSize, RegionKind::Stack});
  p.regs.pc = 0x1000;
  p.regs.sp = 0x10000 + 4 * kPageSize - 64;
  return p;
}

void BM_interpreter_alu(benchmark::State& state) {
  for (auto _ : state) {
    ProcessState p = make_loop_process(state.range(0));
    RunExit e = run(p, 1ull << 40);
    benchmark::DoNotOptimize(e);
    state.counters["guest_cycles"] =
        benchmark::Counter(double(p.regs.cycles), benchmark::Counter::kIsRate);
  }
}
BENCHMARK(BM_interpreter_alu)->Arg(100'000)->Arg(1'000'000)->UseRealTime();

void BM_memory_walk(benchmark::State& state) {
  FunctionBuilder b("walk");
  auto loop = b.make_label();
  b.ldi(1, 0x20000);
  b.ldi(2, 0);
  b.ldi64(3, uint64_t(state.range(0)));
  b.bind(loop);
  b.ld(4, 1, 0);
  b.addi(4, 4, 1);
  b.st(4, 1, 0);
  b.addi(1, 1, 8);
  b.addi(2, 2, 1);
  b.blt(2, 3, loop);
  b.halt();
  FunctionObject fo = b.finish();

  for (auto _ : state) {
    ProcessState p;
    p.space().map_region_bytes({0x1000, kPageSize, RegionKind::Code}, fo.code);
    p.space().map_region({0x20000, pages_for(uint64_t(state.range(0)) * 8) * kPageSize,
                          RegionKind::Heap});
    p.regs.pc = 0x1000;
    run(p, 1ull << 40);
    benchmark::DoNotOptimize(p.regs.cycles);
  }
}
BENCHMARK(BM_memory_walk)->Arg(4096)->Arg(65536);

void BM_fork_cost(benchmark::State& state) {
  for (auto _ : state) {
    state.PauseTiming();
    ProcessState parent;
    parent.space().map_region({0x100000, uint64_t(state.range(0)) * kPageSize, RegionKind::Heap});
    parent.space().map_region({0x1000, kPageSize, RegionKind::Code});
    state.ResumeTiming();
    ProcessState child = vm_fork(parent);
    benchmark::DoNotOptimize(child.space().mapped_pages());
  }
}
BENCHMARK(BM_fork_cost)->Arg(64)->Arg(1024)->Arg(8192);

void BM_cow_break(benchmark::State& state) {
  for (auto _ : state) {
    state.PauseTiming();
    ProcessState parent;
    parent.space().map_region({0x100000, uint64_t(state.range(0)) * kPageSize, RegionKind::Heap});
    for (int64_t i = 0; i < state.range(0); ++i) {
      parent.space().host_write_u64(0x100000 + uint64_t(i) * kPageSize, uint64_t(i));
    }
    ProcessState child = vm_fork(parent);
    state.ResumeTiming();
    for (int64_t i = 0; i < state.range(0); ++i) {
      parent.space().host_write_u64(0x100000 + uint64_t(i) * kPageSize, uint64_t(i) + 1);
    }
    benchmark::DoNotOptimize(child.space().mapped_pages());
  }
}
BENCHMARK(BM_cow_break)->Arg(64)->Arg(512);

}  // namespace
