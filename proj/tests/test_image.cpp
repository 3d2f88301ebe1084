#include <doctest.h>

#include <set>

#include "hotreplay/asm.hpp"
#include "hotreplay/image.hpp"
#include "hotreplay/optimizer.hpp"
#include "hotreplay/rng.hpp"

using namespace hotreplay;

namespace {

// Tiny two-function program: main calls the hot function, which doubles a
// word from the heap and stores the result back.
BenchmarkManifest tiny_manifest() {
  BenchmarkManifest m;
  m.name = "tiny";
  m.hot_function = "hotfn";
  {
    FunctionBuilder b("main");
    b.ldi_sym(1, "__heap");
    b.callt("hotfn");
    b.halt();
    m.objects.push_back(b.finish());
  }
  {
    FunctionBuilder b("hotfn");
    b.ld(2, 1, 0);
    b.muli(2, 2, 2);
    b.st(2, 1, 8);
    b.mov(0, 2);
    b.ret();
    m.objects.push_back(b.finish());
  }
  LayoutSpec lay;
  m.observable = {lay.heap_base, 16, RegionKind::Heap};
  m.globals_init = {};
  m.heap_init = {7, 0, 0, 0, 0, 0, 0, 0};
  return m;
}

std::vector<FunctionObject> with_helpers(const BenchmarkManifest& m, const opt::FlagSpace& space,
                                         const FunctionObject* hot_override = nullptr) {
  std::vector<FunctionObject> objects;
  for (const auto& o : m.objects) {
    if (hot_override && o.name == m.hot_function) {
      objects.push_back(*hot_override);
    } else {
      objects.push_back(o);
    }
  }
  for (auto& h : opt::helper_objects(space)) objects.push_back(std::move(h));
  objects.push_back(opt::make_dummy_caller(space));
  return objects;
}

}  // namespace

TEST_CASE("linking the same objects twice is bit-identical") {
  BenchmarkManifest m = tiny_manifest();
  opt::FlagSpace space = opt::default_flag_space();
  LayoutSpec lay;
  ProgramImage a = link(with_helpers(m, space), m, lay);
  ProgramImage b = link(with_helpers(m, space), m, lay);
  CHECK(serialize_image(a) == serialize_image(b));
}

TEST_CASE("verify_layout: identity holds, different layouts do not") {
  BenchmarkManifest m = tiny_manifest();
  opt::FlagSpace space = opt::default_flag_space();
  LayoutSpec lay;
  ProgramImage base = link(with_helpers(m, space), m, lay);
  CHECK(verify_layout(base, base));

  LayoutSpec other = lay;
  other.hot_region_capacity += kPageSize;
  ProgramImage moved = link(with_helpers(m, space), m, other);
  CHECK_FALSE(verify_layout(base, moved));
}

TEST_CASE("a variant that introduces a helper call keeps every address stable") {
  BenchmarkManifest m = tiny_manifest();
  opt::FlagSpace space = opt::default_flag_space();
  LayoutSpec lay;
  ProgramImage base = link(with_helpers(m, space), m, lay);

  // Hand-built variant hot function that now calls div_fast.
  FunctionBuilder vb("hotfn");
  vb.ld(2, 1, 0);
  vb.mov(1, 2);
  vb.ldi(2, 2);
  vb.callt("div_fast");
  vb.ldi_sym(1, "__heap");
  vb.st(0, 1, 8);
  vb.ret();
  FunctionObject variant_hot = vb.finish();
  ProgramImage variant = link(with_helpers(m, space, &variant_hot), m, lay);

  CHECK(verify_layout(base, variant));
  CHECK(layout_digest(base) == layout_digest(variant));

  // Exhaustive: every symbol, same address; every table slot, same target.
  REQUIRE(base.symbols.size() == variant.symbols.size());
  for (const auto& [name, info] : base.symbols) {
    REQUIRE(variant.symbols.count(name) == 1);
    CHECK(variant.symbols.at(name).addr == info.addr);
  }
  CHECK(base.call_table == variant.call_table);
  CHECK(base.hot_entry == variant.hot_entry);
  CHECK(base.symbol("div_fast").addr == variant.symbol("div_fast").addr);
}

TEST_CASE("padding: the symbol after the hot function starts at hot_entry + capacity") {
  BenchmarkManifest m = tiny_manifest();
  opt::FlagSpace space = opt::default_flag_space();
  LayoutSpec lay;
  ProgramImage img = link(with_helpers(m, space), m, lay);
  Vaddr next = UINT64_MAX;
  for (const auto& [name, info] : img.symbols) {
    if (info.addr > img.hot_entry && info.addr < next) next = info.addr;
  }
  CHECK(next - img.hot_entry == lay.hot_region_capacity);
}

TEST_CASE("call table symbols are the program functions plus every helper") {
  BenchmarkManifest m = tiny_manifest();
  opt::FlagSpace space = opt::default_flag_space();
  ProgramImage img = link(with_helpers(m, space), m, LayoutSpec{});
  std::set<std::string> slots;
  for (const auto& [sym, addr] : img.call_table.slots) slots.insert(sym);
  std::set<std::string> want = {"main", "hotfn", kDummyCallerSymbol};
  for (const auto& h : space.helper_routines) want.insert(h);
  CHECK(slots == want);
}

TEST_CASE("an over-capacity hot function is rejected, not truncated") {
  BenchmarkManifest m = tiny_manifest();
  opt::FlagSpace space = opt::default_flag_space();
  LayoutSpec lay;
  lay.hot_region_capacity = kPageSize;  // 512 instructions

  FunctionBuilder big("hotfn");
  for (int i = 0; i < 600; ++i) big.addi(2, 2, 1);
  big.ret();
  FunctionObject fat = big.finish();
  try {
    link(with_helpers(m, space, &fat), m, lay);
    FAIL("expected HotRegionOverflow");
  } catch (const Error& e) {
    CHECK(e.code() == Error::Code::HotRegionOverflow);
  }
}

TEST_CASE("unresolved symbols are reported") {
  BenchmarkManifest m = tiny_manifest();
  FunctionBuilder b("hotfn");
  b.callt("no_such_routine");
  b.ret();
  FunctionObject broken = b.finish();
  std::vector<FunctionObject> objects = {m.objects[0], broken};
  try {
    link(objects, m, LayoutSpec{});
    FAIL("expected UnresolvedSymbol");
  } catch (const Error& e) {
    CHECK(e.code() == Error::Code::UnresolvedSymbol);
  }
}

TEST_CASE("load maps segments, applies inputs, and runs") {
  BenchmarkManifest m = tiny_manifest();
  opt::FlagSpace space = opt::default_flag_space();
  ProgramImage img = link(with_helpers(m, space), m, LayoutSpec{});
  ProcessState p = load(img, m);
  CHECK(p.regs.pc == img.entry);
  REQUIRE(run(p, 10'000) == RunExit::Halted);
  CHECK(p.exit == ExitInfo::Ok);
  CHECK(p.regs.r[0] == 14);  // doubled heap word
  CHECK(p.space().host_read_u64(img.layout.heap_base + 8) == 14);
}

TEST_CASE("loading twice yields identical initial state") {
  BenchmarkManifest m = tiny_manifest();
  opt::FlagSpace space = opt::default_flag_space();
  ProgramImage img = link(with_helpers(m, space), m, LayoutSpec{});
  ProcessState a = load(img, m);
  ProcessState b = load(img, m);
  CHECK(a.regs == b.regs);
  for (const Region& r : a.space().regions()) {
    CHECK(a.space().host_read(r.start, r.length) == b.space().host_read(r.start, r.length));
  }
}

TEST_CASE("image serialization round-trips bit-exactly") {
  BenchmarkManifest m = tiny_manifest();
  opt::FlagSpace space = opt::default_flag_space();
  ProgramImage img = link(with_helpers(m, space), m, LayoutSpec{}, "unroll=2");
  std::vector<uint8_t> bytes = serialize_image(img);
  ProgramImage back = deserialize_image(bytes);
  CHECK(serialize_image(back) == bytes);
  CHECK(back.build_meta.transformation_set == "unroll=2");
  CHECK(back.symbols.size() == img.symbols.size());
  CHECK(verify_layout(img, back));
}

TEST_CASE("truncated and corrupted image files are rejected") {
  BenchmarkManifest m = tiny_manifest();
  opt::FlagSpace space = opt::default_flag_space();
  ProgramImage img = link(with_helpers(m, space), m, LayoutSpec{});
  std::vector<uint8_t> bytes = serialize_image(img);

  std::vector<uint8_t> truncated(bytes.begin(), bytes.begin() + 20);
  CHECK_THROWS_AS(deserialize_image(truncated), Error);

  std::vector<uint8_t> flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x40;
  try {
    deserialize_image(flipped);
    FAIL("expected digest mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Error::Code::DigestMismatch);
  }

  std::vector<uint8_t> badmagic = bytes;
  badmagic[0] = 'X';
  try {
    deserialize_image(badmagic);
    FAIL("expected bad magic");
  } catch (const Error& e) {
    CHECK(e.code() == Error::Code::BadMagic);
  }
}

TEST_CASE("load rejects an image whose content was tampered with") {
  BenchmarkManifest m = tiny_manifest();
  opt::FlagSpace space = opt::default_flag_space();
  ProgramImage img = link(with_helpers(m, space), m, LayoutSpec{});
  img.segments[0].bytes[16] ^= 0xff;  // corrupt code behind the digest's back
  CHECK_THROWS_AS(load(img, m), Error);
}

TEST_CASE("hot capacity default: next page plus one page of slack") {
  CHECK(default_hot_capacity(1) == 2 * kPageSize);
  CHECK(default_hot_capacity(4096) == 2 * kPageSize);
  CHECK(default_hot_capacity(4097) == 3 * kPageSize);
}
