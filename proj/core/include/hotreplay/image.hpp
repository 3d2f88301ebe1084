#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "hotreplay/vm.hpp"

namespace hotreplay {

// How an instruction's imm field gets patched at link time.
enum class RelocKind : uint8_t {
  AbsAddr32 = 0,   // imm32 := absolute address of symbol
  TableIndex = 1,  // imm32 := call-table slot of symbol
};

struct Relocation {
  uint32_t offset = 0;  // byte offset of the instruction in code
  std::string symbol;
  RelocKind kind = RelocKind::AbsAddr32;
};

// Position-independent object code for one function. Internal control flow
// is pc-relative, so only symbol references need relocations.
struct FunctionObject {
  std::string name;
  std::vector<uint8_t> code;
  std::vector<Relocation> relocations;
  std::set<std::string> referenced_symbols;

  uint64_t size() const { return code.size(); }
  void validate() const;  // offsets in range, reloc symbols referenced
};

// Fixed virtual-address plan shared by every variant of a benchmark.
struct LayoutSpec {
  Vaddr code_base = 0x0001'0000;
  Vaddr call_table_base = 0x000e'0000;
  Vaddr globals_base = 0x0010'0000;
  Vaddr heap_base = 0x0020'0000;
  Vaddr stack_base = 0x0400'0000;
  uint64_t hot_region_capacity = 2 * kPageSize;

  bool operator==(const LayoutSpec&) const = default;
};

struct CallTable {
  // slot index -> (symbol, absolute address); identical across variants.
  std::vector<std::pair<std::string, Vaddr>> slots;

  int find(const std::string& sym) const {
    for (size_t i = 0; i < slots.size(); ++i) {
      if (slots[i].first == sym) return int(i);
    }
    return -1;
  }
  bool operator==(const CallTable&) const = default;
};

struct SymbolInfo {
  Vaddr addr = 0;
  uint64_t size = 0;
  bool operator==(const SymbolInfo&) const = default;
};

struct Segment {
  Region region;
  std::vector<uint8_t> bytes;  // initialized prefix; rest of region is zero
};

struct BuildMeta {
  std::string transformation_set;  // canonical text of the set that built this
  Sha256::Digest content_digest{};
};

struct ProgramImage {
  std::string benchmark;
  LayoutSpec layout;
  std::vector<Segment> segments;
  CallTable call_table;
  std::map<std::string, SymbolInfo> symbols;
  Vaddr entry = 0;
  Vaddr hot_entry = 0;
  uint64_t hot_size = 0;
  std::string hot_function;
  BuildMeta build_meta;

  const SymbolInfo& symbol(const std::string& name) const;
};

// Input description and observable contract for one bundled benchmark.
struct BenchmarkManifest {
  std::string name;
  std::vector<FunctionObject> objects;  // entry first by convention
  std::string hot_function;
  std::string entry_function = "main";

  std::vector<uint8_t> globals_init;  // written at globals_base on load
  std::vector<uint8_t> heap_init;     // written at heap_base on load
  uint64_t globals_len = kPageSize;
  uint64_t heap_len = kPageSize;
  uint64_t stack_len = 4 * kPageSize;

  Region observable;  // the output window checked for semantic equality
  std::string expected_full_runs;  // human description of the input regime
  uint64_t input_seed = 0;
};

constexpr const char* kReplayHaltSymbol = "__replay_halt";
constexpr const char* kDummyCallerSymbol = "__dummy_caller";

// Links objects into a fixed-layout image: the hot function sits at
// code_base, padded to hot_region_capacity so everything after it keeps a
// stable address; never-executed dummy calls force helper routines into
// the call table of every variant.
//
// Throws Error::HotRegionOverflow when the (possibly transformed) hot
// function does not fit its reserved region, Error::UnresolvedSymbol for
// dangling references.
ProgramImage link(const std::vector<FunctionObject>& objects, const BenchmarkManifest& manifest,
                  const LayoutSpec& layout, const std::string& set_text = "");

// True iff symbol addresses, call table, segment geometry and hot_entry
// all match; the hot function body is allowed to differ.
bool verify_layout(const ProgramImage& a, const ProgramImage& b);

// Digest over everything verify_layout compares. Snapshots pin this and
// replay refuses images whose digest differs.
Sha256::Digest layout_digest(const ProgramImage& img);

// Capacity rule used for bundled benchmarks: baseline hot size rounded up
// to the next page, plus one page of slack.
uint64_t default_hot_capacity(uint64_t baseline_hot_size);

// Code-segment functions larger than the fetch threshold, sorted by start.
std::vector<CodeExtent> big_function_extents(const ProgramImage& img, const CostModel& cost);

// Instantiates a runnable process: segments mapped, globals/heap overlaid
// with manifest inputs, sp at stack top, pc at entry.
ProcessState load(const ProgramImage& img, const BenchmarkManifest& manifest,
                  const CostModel* cost = nullptr);

// Image file, little-endian, magic "HRIM". Bit-exact round trip.
std::vector<uint8_t> serialize_image(const ProgramImage& img);
ProgramImage deserialize_image(const std::vector<uint8_t>& bytes);

}  // namespace hotreplay
