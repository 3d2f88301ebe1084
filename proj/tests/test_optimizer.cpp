#include <doctest.h>

#include <set>

#include "hotreplay/asm.hpp"
#include "hotreplay/optimizer.hpp"
#include "hotreplay/passes.hpp"
#include "test_helpers.hpp"

using namespace hotreplay;
using namespace hotreplay::testing;

namespace {

struct ForcedCoins : opt::SampleSource {
  bool heads;
  uint64_t pick = 0;
  explicit ForcedCoins(bool h) : heads(h) {}
  bool coin() override { return heads; }
  uint64_t below(uint64_t n) override { return pick % n; }
};

// Runs a symbol-free function object as a bare process: r1..r5 preloaded,
// result in r0, a sentinel return address parked on the stack.
struct FnRun {
  Word r0;
  std::vector<uint8_t> data;
  uint64_t cycles;
};

FnRun run_fn(const FunctionObject& fo, std::vector<Word> args,
             const std::vector<uint8_t>& data = {}, uint64_t data_len = 4 * kPageSize) {
  REQUIRE(fo.relocations.empty());
  std::vector<Instruction> body = decode_all(fo.code);
  RawProcess rp(body, pages_for(data_len) + 1);
  if (!data.empty()) rp.proc.space().host_write(RawProcess::kData, data);
  for (size_t i = 0; i < args.size(); ++i) rp.proc.regs.r[1 + i] = args[i];
  Vaddr stub = RawProcess::kCode + body.size() * kInstrBytes;
  rp.proc.space().host_write(stub, encode_all({{Op::HALT, 0, 0, 0, false, 0}}));
  rp.proc.regs.sp -= 8;
  rp.proc.space().host_write_u64(rp.proc.regs.sp, stub);
  REQUIRE(run(rp.proc, 50'000'000) == RunExit::Halted);
  REQUIRE(rp.proc.exit == ExitInfo::Ok);
  FnRun out;
  out.r0 = rp.proc.regs.r[0];
  out.data = rp.proc.space().host_read(RawProcess::kData, data_len);
  out.cycles = rp.proc.regs.cycles;
  return out;
}

void check_equivalent(const FunctionObject& a, const FunctionObject& b, std::vector<Word> args,
                      const std::vector<uint8_t>& data = {}) {
  FnRun ra = run_fn(a, args, data);
  FnRun rb = run_fn(b, args, data);
  CHECK(ra.r0 == rb.r0);
  CHECK(ra.data == rb.data);
}

std::vector<uint8_t> pattern_data(size_t words) {
  std::vector<uint8_t> bytes(words * 8, 0);
  for (size_t i = 0; i < words; ++i) {
    uint64_t v = (i * 2654435761ull) & 0xffff;
    for (int k = 0; k < 8; ++k) bytes[i * 8 + k] = uint8_t(v >> (8 * k));
  }
  return bytes;
}

// Sums r1 words starting at kData through a counted pointer-walking loop;
// the canonical shape the loop passes must handle.
FunctionObject sum_loop_fn() {
  FunctionBuilder b("sum");
  auto loop = b.make_label();
  b.ldi(8, RawProcess::kData);
  b.ldi(9, 0);
  b.ldi(0, 0);
  b.bind(loop);
  b.ld(10, 8, 0);
  b.add(0, 0, 10);
  b.addi(8, 8, 8);
  b.addi(9, 9, 1);
  b.blt(9, 1, loop);
  b.ret();
  return b.finish();
}

}  // namespace

TEST_CASE("forced heads includes every flag; forced tails keeps every default") {
  opt::FlagSpace space = opt::default_flag_space();
  ForcedCoins heads(true);
  opt::TransformationSet all_in = opt::sample_set(space, heads);
  for (const auto& a : all_in.assignments) CHECK(a.drawn);

  ForcedCoins tails(false);
  opt::TransformationSet defaults = opt::sample_set(space, tails);
  for (const auto& a : defaults.assignments) CHECK_FALSE(a.drawn);
  CHECK(defaults.canonical_text() == opt::defaults_set(space).canonical_text());
}

TEST_CASE("each flag is included with frequency one half") {
  opt::FlagSpace space = opt::default_flag_space();
  Rng rng(2024);
  std::vector<uint64_t> drawn(space.flags.size(), 0);
  const int kSamples = 100000;
  for (int s = 0; s < kSamples; ++s) {
    opt::TransformationSet set = opt::sample_set(space, rng);
    for (size_t i = 0; i < set.assignments.size(); ++i) drawn[i] += set.assignments[i].drawn;
  }
  for (size_t i = 0; i < space.flags.size(); ++i) {
    double freq = double(drawn[i]) / kSamples;
    CHECK(freq > 0.49);
    CHECK(freq < 0.51);
  }
}

TEST_CASE("sampling is deterministic per seed") {
  opt::FlagSpace space = opt::default_flag_space();
  Rng a(7), b(7);
  for (int i = 0; i < 50; ++i) {
    CHECK(opt::sample_set(space, a).canonical_text() == opt::sample_set(space, b).canonical_text());
  }
}

TEST_CASE("space_size: empty, booleans, and the mixed product rule") {
  opt::FlagSpace empty;
  CHECK(opt::space_size(empty).boolean_only == 1.0);
  CHECK(opt::space_size(empty).full == 1.0);

  opt::FlagSpace three;
  for (const char* n : {"a", "b", "c"}) {
    three.flags.push_back({n, opt::Flag::Kind::Boolean, {}, "off"});
  }
  CHECK(opt::space_size(three).boolean_only == 8.0);
  CHECK(opt::space_size(three).full == 8.0);

  opt::FlagSpace mixed;
  mixed.flags.push_back({"a", opt::Flag::Kind::Boolean, {}, "off"});
  mixed.flags.push_back({"b", opt::Flag::Kind::Boolean, {}, "off"});
  mixed.flags.push_back({"u", opt::Flag::Kind::Enumerated, {"1", "2", "4", "8"}, "1"});
  CHECK(opt::space_size(mixed).boolean_only == 8.0);
  CHECK(opt::space_size(mixed).full == 16.0);

  // Exhaustive oracle: enumerate every include/parameter decision path and
  // count the distinct sets it can produce.
  std::set<std::string> distinct;
  for (int ia = 0; ia < 3; ++ia) {
    for (int ib = 0; ib < 3; ++ib) {
      for (int iu = 0; iu < 5; ++iu) {
        opt::TransformationSet set = opt::defaults_set(mixed);
        if (ia > 0) set.assignments[0].value = ia == 1 ? "on" : "off";
        if (ib > 0) set.assignments[1].value = ib == 1 ? "on" : "off";
        if (iu > 0) set.assignments[2].value = mixed.flags[2].values[size_t(iu - 1)];
        distinct.insert(set.canonical_text());
      }
    }
  }
  CHECK(double(distinct.size()) == opt::space_size(mixed).full);
}

TEST_CASE("flag space JSON round-trips and validates") {
  opt::FlagSpace space = opt::default_flag_space();
  std::string json = opt::flag_space_to_json(space);
  opt::FlagSpace back = opt::flag_space_from_json(json);
  REQUIRE(back.flags.size() == space.flags.size());
  for (size_t i = 0; i < space.flags.size(); ++i) {
    CHECK(back.flags[i].name == space.flags[i].name);
    CHECK(back.flags[i].default_value == space.flags[i].default_value);
  }
  CHECK(back.helper_routines == space.helper_routines);

  CHECK_THROWS_AS(
      opt::flag_space_from_json(R"({"flags":[{"name":"x","kind":"enum","values":[]}]})"), Error);
  CHECK_THROWS_AS(
      opt::flag_space_from_json(R"({"flags":[{"name":"x","kind":"enum","values":["a","a"]}]})"),
      Error);
}

TEST_CASE("the all-defaults set is a byte-identical identity") {
  opt::FlagSpace space = opt::default_flag_space();
  FunctionObject fn = sum_loop_fn();
  FunctionObject out = opt::apply(fn, opt::defaults_set(space), space);
  CHECK(out.code == fn.code);
  CHECK(out.name == fn.name);
}

TEST_CASE("apply is deterministic") {
  opt::FlagSpace space = opt::default_flag_space();
  Rng rng(5);
  FunctionObject fn = sum_loop_fn();
  for (int i = 0; i < 20; ++i) {
    opt::TransformationSet set = opt::sample_set(space, rng);
    CHECK(opt::apply(fn, set, space).code == opt::apply(fn, set, space).code);
  }
}

TEST_CASE("strength reduction rewrites power-of-two multiply and divide") {
  FunctionBuilder b("f");
  b.muli(1, 2, 8);
  b.ret();
  opt::IrProgram ir = opt::ir_decode(b.finish());
  CHECK(opt::pass_strength_reduce(ir));
  CHECK(ir.code[0].ins.op == Op::SHL);
  CHECK(ir.code[0].ins.rd == 1);
  CHECK(ir.code[0].ins.ra == 2);
  CHECK(ir.code[0].ins.use_imm);
  CHECK(ir.code[0].ins.imm == 3);

  FunctionBuilder d("g");
  d.divi(1, 2, 16);
  d.ret();
  opt::IrProgram ir2 = opt::ir_decode(d.finish());
  CHECK(opt::pass_strength_reduce(ir2));
  CHECK(ir2.code[0].ins.op == Op::SHR);
  CHECK(ir2.code[0].ins.imm == 4);
}

TEST_CASE("constant folding collapses chains and known branches") {
  FunctionBuilder b("f");
  auto skip = b.make_label();
  b.ldi(1, 6);
  b.ldi(2, 7);
  b.mul(3, 1, 2);
  b.addi(3, 3, 1);
  b.blt(1, 2, skip);
  b.ldi(0, 999);
  b.bind(skip);
  b.mov(0, 3);
  b.ret();
  FunctionObject fn = b.finish();

  opt::IrProgram ir = opt::ir_decode(fn);
  CHECK(opt::pass_const_fold(ir));
  FunctionObject out = opt::ir_encode(ir, "f");
  check_equivalent(fn, out, {});
  CHECK(run_fn(out, {}).r0 == 43);
  bool has_mul = false;
  for (const auto& i : ir.code) has_mul = has_mul || i.ins.op == Op::MUL;
  CHECK_FALSE(has_mul);
}

TEST_CASE("constant folding never folds a divide by zero away") {
  FunctionBuilder b("f");
  b.ldi(1, 10);
  b.ldi(2, 0);
  b.div(3, 1, 2);
  b.ret();
  opt::IrProgram ir = opt::ir_decode(b.finish());
  opt::pass_const_fold(ir);
  bool has_div = false;
  for (const auto& i : ir.code) has_div = has_div || i.ins.op == Op::DIV;
  CHECK(has_div);
}

TEST_CASE("dead code elimination drops unused register writes, never stores") {
  FunctionBuilder b("f");
  b.ldi(5, 123);
  b.ldi(6, 5);
  b.addi(6, 6, 1);
  b.ldi(1, 17);
  b.ldi(2, RawProcess::kData);
  b.st(1, 2, 0);
  b.mov(0, 1);
  b.ret();
  FunctionObject fn = b.finish();
  opt::IrProgram ir = opt::ir_decode(fn);
  CHECK(opt::pass_dead_code_elim(ir));
  FunctionObject out = opt::ir_encode(ir, "f");
  CHECK(out.code.size() < fn.code.size());
  int stores = 0;
  for (const auto& i : ir.code) stores += i.ins.op == Op::ST;
  CHECK(stores == 1);
  check_equivalent(fn, out, {});
}

TEST_CASE("peephole: identity moves, add zero, xor self") {
  FunctionBuilder b("f");
  b.ldi(1, 9);
  b.mov(2, 2);
  b.addi(1, 1, 0);
  b.xor_(3, 4, 4);
  b.ret();
  FunctionObject fn = b.finish();
  opt::IrProgram ir = opt::ir_decode(fn);
  CHECK(opt::pass_peephole(ir));
  CHECK(ir.code.size() == 3);
  CHECK(ir.code[1].ins.op == Op::LDI);
  CHECK(ir.code[1].ins.imm == 0);
}

TEST_CASE("redundant load elimination reuses the stored value") {
  FunctionBuilder b("f");
  b.ldi(2, RawProcess::kData);
  b.ldi(1, 77);
  b.st(1, 2, 16);
  b.ld(3, 2, 16);
  b.ld(4, 2, 16);
  b.add(0, 3, 4);
  b.ret();
  FunctionObject fn = b.finish();
  opt::IrProgram ir = opt::ir_decode(fn);
  CHECK(opt::pass_redundant_load_elim(ir));
  int loads = 0;
  for (const auto& i : ir.code) loads += i.ins.op == Op::LD;
  CHECK(loads == 0);
  check_equivalent(fn, opt::ir_encode(ir, "f"), {});
}

TEST_CASE("redundant load elimination respects aliasing and clobbers") {
  FunctionBuilder b("f");
  b.ldi(2, RawProcess::kData);
  b.ld(3, 2, 0);
  b.st(3, 2, 8);
  b.ld(4, 2, 0);
  b.addi(2, 2, 8);
  b.ld(5, 2, 0);
  b.add(0, 4, 5);
  b.ret();
  FunctionObject fn = b.finish();
  opt::IrProgram ir = opt::ir_decode(fn);
  opt::pass_redundant_load_elim(ir);
  int loads = 0;
  for (const auto& i : ir.code) loads += i.ins.op == Op::LD;
  CHECK(loads == 2);
  check_equivalent(fn, opt::ir_encode(ir, "f"), {}, pattern_data(8));
}

TEST_CASE("branch straightening collapses jump chains") {
  FunctionBuilder b("f");
  auto l1 = b.make_label();
  auto l2 = b.make_label();
  auto end = b.make_label();
  b.ldi(1, 1);
  b.ldi(2, 2);
  b.blt(1, 2, l1);
  b.bind(l1);
  b.jmp(l2);
  b.bind(l2);
  b.jmp(end);
  b.bind(end);
  b.ldi(0, 5);
  b.ret();
  FunctionObject fn = b.finish();
  opt::IrProgram ir = opt::ir_decode(fn);
  CHECK(opt::pass_branch_straighten(ir));
  FunctionObject out = opt::ir_encode(ir, "f");
  check_equivalent(fn, out, {});
  CHECK(run_fn(out, {}).r0 == 5);
}

TEST_CASE("fast-helper substitution retargets generic calls") {
  FunctionBuilder b("f");
  b.callt("soft_div");
  b.callt("memfill");
  b.callt("something_else");
  b.ret();
  opt::IrProgram ir = opt::ir_decode(b.finish());
  CHECK(opt::pass_fast_helper(ir));
  FunctionObject out = opt::ir_encode(ir, "f");
  CHECK(out.referenced_symbols.count("div_fast") == 1);
  CHECK(out.referenced_symbols.count("memfill_fast") == 1);
  CHECK(out.referenced_symbols.count("something_else") == 1);
  CHECK(out.referenced_symbols.count("soft_div") == 0);
}

TEST_CASE("loop unrolling preserves semantics for every residue class") {
  FunctionObject fn = sum_loop_fn();
  std::vector<uint8_t> data = pattern_data(64);
  for (int factor : {2, 4, 8}) {
    for (uint64_t n : {0ull, 1ull, 2ull, 3ull, 4ull, 5ull, 7ull, 8ull, 9ull, 16ull, 33ull}) {
      opt::IrProgram ir = opt::ir_decode(fn);
      bool changed = opt::pass_loop_unroll(ir, factor);
      CHECK(changed);
      FunctionObject out = opt::ir_encode(ir, "sum");
      FnRun a = run_fn(fn, {n}, data);
      FnRun b = run_fn(out, {n}, data);
      CHECK(a.r0 == b.r0);
      // With this 4-cycle body the folded copies pay off from factor 4 up;
      // factor 2 sits at break-even, which is the double-edged point.
      if (n >= 32 && factor >= 4) CHECK(b.cycles < a.cycles);
    }
  }
}

TEST_CASE("loop unrolling keeps per-copy induction when the body reads the counter") {
  FunctionBuilder b("f");
  auto loop = b.make_label();
  b.ldi(8, RawProcess::kData);
  b.ldi(9, 0);
  b.ldi(0, 0);
  b.bind(loop);
  b.ld(10, 8, 0);
  b.add(10, 10, 9);
  b.add(0, 0, 10);
  b.addi(8, 8, 8);
  b.addi(9, 9, 1);
  b.blt(9, 1, loop);
  b.ret();
  FunctionObject fn = b.finish();
  std::vector<uint8_t> data = pattern_data(64);
  for (uint64_t n : {1ull, 5ull, 8ull, 13ull}) {
    opt::IrProgram ir = opt::ir_decode(fn);
    REQUIRE(opt::pass_loop_unroll(ir, 4));
    CHECK(run_fn(fn, {n}, data).r0 == run_fn(opt::ir_encode(ir, "f"), {n}, data).r0);
  }
}

TEST_CASE("loop unrolling bails out on loops with branches in the body") {
  FunctionBuilder b("f");
  auto loop = b.make_label();
  auto skip = b.make_label();
  b.ldi(8, RawProcess::kData);
  b.ldi(9, 0);
  b.ldi(0, 0);
  b.bind(loop);
  b.ld(10, 8, 0);
  b.blt(10, 0, skip);
  b.add(0, 0, 10);
  b.bind(skip);
  b.addi(8, 8, 8);
  b.addi(9, 9, 1);
  b.blt(9, 1, loop);
  b.ret();
  opt::IrProgram ir = opt::ir_decode(b.finish());
  CHECK_FALSE(opt::pass_loop_unroll(ir, 4));
}

TEST_CASE("greedy scheduling separates store-load pairs when legal") {
  FunctionBuilder b("f");
  b.ldi(2, RawProcess::kData);
  b.ldi(1, 5);
  b.st(1, 2, 0);
  b.ld(3, 2, 8);
  b.addi(4, 1, 9);
  b.add(0, 3, 4);
  b.ret();
  FunctionObject fn = b.finish();
  opt::IrProgram ir = opt::ir_decode(fn);
  CHECK(opt::pass_schedule_greedy(ir));
  CHECK(ir.code[3].ins.op == Op::ADD);
  CHECK(ir.code[4].ins.op == Op::LD);
  FunctionObject out = opt::ir_encode(ir, "f");
  FnRun a = run_fn(fn, {}, pattern_data(8));
  FnRun c = run_fn(out, {}, pattern_data(8));
  CHECK(a.r0 == c.r0);
  CHECK(c.cycles + 1 == a.cycles);
}

TEST_CASE("spill-heavy allocation is a pure pessimization") {
  FunctionObject fn = sum_loop_fn();
  opt::IrProgram ir = opt::ir_decode(fn);
  CHECK(opt::pass_spill_heavy(ir));
  FunctionObject out = opt::ir_encode(ir, "f");
  std::vector<uint8_t> data = pattern_data(32);
  FnRun a = run_fn(fn, {8}, data);
  FnRun b = run_fn(out, {8}, data);
  CHECK(a.r0 == b.r0);
  CHECK(a.data == b.data);
  CHECK(b.cycles > a.cycles * 2);
}

TEST_CASE("alignment padding keeps branch targets on 16-byte boundaries") {
  FunctionObject fn = sum_loop_fn();
  opt::IrProgram ir = opt::ir_decode(fn);
  opt::pass_code_align_pad(ir);
  for (const auto& in : ir.code) {
    if (in.target >= 0) CHECK((uint64_t(in.target) * kInstrBytes) % 16 == 0);
  }
  FunctionObject out = opt::ir_encode(ir, "f");
  std::vector<uint8_t> data = pattern_data(16);
  CHECK(run_fn(fn, {7}, data).r0 == run_fn(out, {7}, data).r0);
}

TEST_CASE("bounds-check hoisting versions the loop and keeps the abort path") {
  FunctionBuilder b("f");
  auto loop = b.make_label();
  auto ok = b.make_label();
  auto abort_l = b.make_label();
  auto done = b.make_label();
  b.ldi(8, RawProcess::kData);
  b.ldi(9, 0);
  b.ldi(0, 0);
  b.bind(loop);
  b.blt(9, 2, ok);
  b.jmp(abort_l);
  b.bind(ok);
  b.ld(10, 8, 0);
  b.add(0, 0, 10);
  b.addi(8, 8, 8);
  b.addi(9, 9, 1);
  b.blt(9, 1, loop);
  b.jmp(done);
  b.bind(abort_l);
  b.ldi(0, 0);
  b.subi(0, 0, 1);
  b.bind(done);
  b.ret();
  FunctionObject fn = b.finish();

  opt::IrProgram ir = opt::ir_decode(fn);
  REQUIRE(opt::pass_bounds_check_hoist(ir));
  FunctionObject out = opt::ir_encode(ir, "f");
  std::vector<uint8_t> data = pattern_data(64);

  FnRun a = run_fn(fn, {10, 64}, data);
  FnRun c = run_fn(out, {10, 64}, data);
  CHECK(a.r0 == c.r0);
  CHECK(c.cycles < a.cycles);

  FnRun av = run_fn(fn, {10, 4}, data);
  FnRun cv = run_fn(out, {10, 4}, data);
  CHECK(av.r0 == cv.r0);
  CHECK(av.r0 == ~0ull);
}

TEST_CASE("pass failures surface as PassInternal, not crashes") {
  opt::FlagSpace space = opt::default_flag_space();
  FunctionObject broken;
  broken.name = "bad";
  broken.code = {1, 2, 3};
  opt::TransformationSet set = opt::defaults_set(space);
  try {
    opt::apply(broken, set, space);
    FAIL("expected PassInternal");
  } catch (const Error& e) {
    CHECK(e.code() == Error::Code::PassInternal);
  }
}

TEST_CASE("random transformation sets preserve semantics on a mixed fixture") {
  // A fixture exercising loads, stores, arithmetic, and a counted loop.
  FunctionBuilder b("mix");
  auto loop = b.make_label();
  b.ldi(8, RawProcess::kData);
  b.ldi(9, 0);
  b.ldi(0, 0);
  b.ldi(11, 3);  // dead-ish value with later use
  b.bind(loop);
  b.ld(10, 8, 0);
  b.muli(12, 10, 8);
  b.add(12, 12, 11);
  b.st(12, 8, 2048);
  b.add(0, 0, 12);
  b.addi(8, 8, 8);
  b.addi(9, 9, 1);
  b.blt(9, 1, loop);
  b.ret();
  FunctionObject fn = b.finish();

  opt::FlagSpace space = opt::default_flag_space();
  Rng rng(31337);
  std::vector<uint8_t> data = pattern_data(80);
  for (int i = 0; i < 60; ++i) {
    opt::TransformationSet set = opt::sample_set(space, rng);
    // the fast-helper flag needs a call table; this fixture has none
    for (auto& a : set.assignments) {
      if (a.flag == "fast-helper-substitution") a.value = "off";
    }
    FunctionObject out = opt::apply(fn, set, space);
    for (uint64_t n : {1ull, 7ull, 16ull}) {
      FnRun ra = run_fn(fn, {n}, data);
      FnRun rb = run_fn(out, {n}, data);
      CHECK(ra.r0 == rb.r0);
      CHECK(ra.data == rb.data);
    }
  }
}
