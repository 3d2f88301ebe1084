#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hotreplay/bytesio.hpp"

namespace hotreplay {

using Word = uint64_t;   // all guest arithmetic wraps mod 2^64
using Vaddr = uint64_t;  // guest virtual address

constexpr uint64_t kPageSize = 4096;
constexpr uint64_t kPageMask = kPageSize - 1;

inline uint64_t page_of(Vaddr a) { return a / kPageSize; }
inline Vaddr page_base(Vaddr a) { return a & ~kPageMask; }
inline uint64_t pages_for(uint64_t bytes) { return (bytes + kPageSize - 1) / kPageSize; }

// ---------------------------------------------------------------------------
// Memory
// ---------------------------------------------------------------------------

struct Page {
  std::array<uint8_t, kPageSize> data;
};

enum class Protection : uint8_t { None = 0, Read = 1, ReadWrite = 2 };

enum class RegionKind : uint8_t { Code = 0, Globals = 1, Heap = 2, Stack = 3, SharedLog = 4 };

const char* region_kind_name(RegionKind k);

// A contiguous mapped range. start is page aligned, length a page multiple.
struct Region {
  Vaddr start = 0;
  uint64_t length = 0;
  RegionKind kind = RegionKind::Heap;

  Vaddr end() const { return start + length; }
  bool contains(Vaddr a) const { return a >= start && a < end(); }
  uint64_t page_count() const { return length / kPageSize; }
};

// Data regions (the ones the capture protocol protects).
inline bool is_data_kind(RegionKind k) {
  return k == RegionKind::Globals || k == RegionKind::Heap || k == RegionKind::Stack;
}

using FrameId = uint32_t;

// Refcounted physical frame pool shared by one process family (a process
// and everything forked from it). Frame 0 is a pinned all-zero frame that
// backs untouched pages; a write duplicates it through the normal COW path.
class FrameStore {
 public:
  FrameStore();

  FrameId alloc_zero();
  FrameId alloc_bytes(const uint8_t* p, size_t n);
  FrameId alloc_copy(FrameId src);
  void add_ref(FrameId f);
  void release(FrameId f);

  FrameId zero_frame() const { return 0; }
  uint64_t refcount(FrameId f) const { return slots_[f].refcount; }
  const uint8_t* data(FrameId f) const { return slots_[f].page->data.data(); }
  uint8_t* data(FrameId f) { return slots_[f].page->data.data(); }
  uint64_t live_frames() const { return live_; }

  // Refcount conservation: every frame's refcount must equal the number of
  // page-table entries referencing it across all address spaces attached to
  // this store (plus the zero-frame pin). Exercised after structural
  // mutations in debug builds and on demand from tests.
  void register_space(const class AddressSpace* s) { spaces_.push_back(s); }
  void unregister_space(const class AddressSpace* s);
  bool validate_refcounts(std::string* why = nullptr) const;

 private:
  struct Slot {
    std::unique_ptr<Page> page;
    uint64_t refcount = 0;
  };
  FrameId grab_slot();
  std::vector<Slot> slots_;
  std::vector<FrameId> free_;
  std::vector<const class AddressSpace*> spaces_;
  uint64_t live_ = 0;
};

struct PageTableEntry {
  FrameId frame = 0;
  Protection prot = Protection::ReadWrite;
  bool cow = false;
  bool shared = false;
};

enum class AccessType : uint8_t { Read = 0, Write = 1 };
enum class FaultKind : uint8_t { Protection = 0, Unmapped = 1 };

// Raised before any architectural side effect of the faulting instruction;
// re-stepping after the handler ran retries the same instruction.
struct Fault {
  Vaddr vaddr = 0;
  AccessType access = AccessType::Read;
  FaultKind kind = FaultKind::Unmapped;
};

// Observer for test oracles (access traces, cost traces). Not used by any
// production path.
struct TraceSink {
  virtual ~TraceSink() = default;
  virtual void on_exec(Vaddr pc, uint8_t opcode, uint64_t cycles_after) = 0;
  virtual void on_mem(Vaddr addr, uint32_t len, bool is_write) = 0;
};

// Paged address space: disjoint regions, each fully mapped.
class AddressSpace {
 public:
  AddressSpace() = default;
  explicit AddressSpace(std::shared_ptr<FrameStore> store);
  ~AddressSpace();

  AddressSpace(const AddressSpace&) = delete;
  AddressSpace& operator=(const AddressSpace&) = delete;
  AddressSpace(AddressSpace&&) noexcept;
  AddressSpace& operator=(AddressSpace&&) noexcept;

  const std::shared_ptr<FrameStore>& store() const { return store_; }

  // Maps a new region; every page backed by the shared zero frame until
  // written (or by fresh frames holding `init` bytes for code).
  void map_region(const Region& r, bool shared = false);
  void map_region_bytes(const Region& r, const std::vector<uint8_t>& init);
  // Extends an existing region by whole pages (heap growth).
  void grow_region(Vaddr region_start, uint64_t extra_bytes);
  // Removes a region entirely, releasing its frames.
  void unmap_region(Vaddr region_start);

  std::vector<Region> regions() const;  // sorted by start
  uint64_t mapped_pages() const { return mapped_pages_; }
  uint64_t mapped_data_bytes() const;  // Globals + Heap + Stack

  bool is_mapped(Vaddr a) const { return find(a) != nullptr; }
  const Region* region_at(Vaddr a) const;
  const PageTableEntry* pte_at(Vaddr a) const;

  // Guest-visible access. Honors protection; returns a fault instead of
  // touching anything when the (possibly page-spanning) range is not fully
  // accessible. Writes duplicate COW frames.
  std::optional<Fault> guest_read(Vaddr a, uint8_t* dst, uint32_t len);
  std::optional<Fault> guest_write(Vaddr a, const uint8_t* src, uint32_t len);

  // Word-aligned single-word accesses stay within one page; the interpreter
  // drives almost everything through these.
  std::optional<Fault> guest_read_u64(Vaddr a, uint64_t& out);
  std::optional<Fault> guest_write_u64_checked(Vaddr a, uint64_t v);

  // Instruction fetch: mapped-only check, protection ignored. Returns
  // nullptr when the address is unmapped.
  const uint8_t* fetch_ptr(Vaddr a, uint32_t len) const;

  // Host-level access for engines and tests: bypasses protection, still
  // COWs on write. Throws Error::Unmapped on unmapped ranges.
  void host_read(Vaddr a, uint8_t* dst, uint64_t len) const;
  std::vector<uint8_t> host_read(Vaddr a, uint64_t len) const;
  void host_write(Vaddr a, const uint8_t* src, uint64_t len);
  void host_write(Vaddr a, const std::vector<uint8_t>& bytes) { host_write(a, bytes.data(), bytes.size()); }
  uint64_t host_read_u64(Vaddr a) const;
  void host_write_u64(Vaddr a, uint64_t v);

  // Data-access protection. Instruction fetch is unaffected. Throws on
  // unmapped ranges.
  void set_protection(Vaddr start, uint64_t length, Protection prot);
  Protection protection_at(Vaddr a) const;

  // COW fork: child references the same frames; non-shared entries become
  // cow on both sides.
  AddressSpace fork_clone();

  bool validate_refcounts(std::string* why = nullptr) const { return store_->validate_refcounts(why); }

 private:
  friend class FrameStore;
  struct Mapped {
    Region region;
    std::vector<PageTableEntry> ptes;
    bool shared = false;
  };

  Mapped* find(Vaddr a);
  const Mapped* find(Vaddr a) const;
  uint8_t* writable_page(Mapped& m, size_t page_idx);
  void insert_sorted(Mapped&& m);

  std::shared_ptr<FrameStore> store_;
  std::vector<Mapped> maps_;  // sorted by region.start
  uint64_t mapped_pages_ = 0;
  mutable size_t last_hit_ = 0;
};

// ---------------------------------------------------------------------------
// Machine state
// ---------------------------------------------------------------------------

constexpr int kNumRegs = 16;
constexpr uint8_t kSpReg = 16;  // register operand 16 names sp

struct RegisterFile {
  std::array<Word, kNumRegs> r{};
  Vaddr pc = 0;
  Vaddr sp = 0;
  uint64_t cycles = 0;

  Word get(uint8_t idx) const { return idx == kSpReg ? sp : r[idx]; }
  void set(uint8_t idx, Word v) {
    if (idx == kSpReg) sp = v; else r[idx] = v;
  }
  bool operator==(const RegisterFile&) const = default;
};

// Cycle cost model. The fork/VMA/fault constants are calibration knobs;
// defaults are chosen so the bundled benchmarks keep capture overhead
// under 2%.
struct CostModel {
  uint64_t base = 1;
  uint64_t mul = 3;
  uint64_t div = 12;
  uint64_t mem = 3;   // LD / ST
  uint64_t call = 2;  // CALLT / CALLD (includes the return-address push)
  uint64_t ret = 2;   // includes the pop
  uint64_t fault_dispatch = 50;
  uint64_t fork_base = 5000;
  uint64_t fork_per_page = 2;
  uint64_t vma_per_region = 10;
  // A load immediately after a store stalls one extra cycle (forwarding
  // analog). Gives instruction scheduling something real to do.
  uint64_t store_load_stall = 1;
  // Functions whose encoded size exceeds the threshold pay an extra cycle
  // per executed instruction (fetch pressure analog); aggressive unrolling
  // can therefore lose.
  uint64_t fetch_threshold_bytes = 8192;
  uint64_t fetch_penalty = 1;
  // Modeled cost of staging one replay (image + state load), used by the
  // replays-per-execution ratio.
  uint64_t replay_setup_base = 200;
  uint64_t replay_setup_per_page = 16;
};

const CostModel& default_cost_model();

enum class ProcStatus : uint8_t { Running = 0, Suspended = 1, Halted = 2 };

enum class ExitInfo : uint8_t {
  None = 0,
  Ok,
  DivByZero,
  InvalidInstruction,
  UnhandledFault,
  BadCallIndex,
};

const char* exit_info_name(ExitInfo e);

// Host fault handler: return true when the fault was handled and the
// instruction should be retried.
class ProcessState;
using FaultHook = std::function<bool(ProcessState&, const Fault&)>;

// Address range of a function whose size exceeds the fetch threshold.
struct CodeExtent {
  Vaddr start = 0;
  Vaddr end = 0;
};

class ProcessState {
 public:
  ProcessState() : space_(std::make_shared<FrameStore>()) {}
  explicit ProcessState(AddressSpace space) : space_(std::move(space)) {}

  ProcessState(const ProcessState&) = delete;
  ProcessState& operator=(const ProcessState&) = delete;
  ProcessState(ProcessState&&) = default;
  ProcessState& operator=(ProcessState&&) = default;

  RegisterFile regs;
  ProcStatus status = ProcStatus::Running;
  ExitInfo exit = ExitInfo::None;
  FaultHook fault_hook;
  TraceSink* trace = nullptr;
  bool capture_active = false;

  // Call table window (populated by the loader).
  Vaddr call_table_base = 0;
  uint32_t call_table_slots = 0;

  // Fetch-penalty ranges, sorted by start.
  std::vector<CodeExtent> big_functions;

  const CostModel* cost = &default_cost_model();

  AddressSpace& space() { return space_; }
  const AddressSpace& space() const { return space_; }

  void halt(ExitInfo why) {
    status = ProcStatus::Halted;
    exit = why;
  }

 private:
  friend ProcessState vm_fork(ProcessState&);
  AddressSpace space_;
  bool last_was_store_ = false;
  friend struct StepImpl;
};

// ---------------------------------------------------------------------------
// Instructions
// ---------------------------------------------------------------------------

enum class Op : uint8_t {
  LDI = 1, MOV, ADD, SUB, MUL, DIV, AND, OR, XOR, SHL, SHR,
  LD, ST, JMP, BEQ, BNE, BLT, CALLT, CALLD, RET, HALT,
};

constexpr uint8_t kMaxOpcode = uint8_t(Op::HALT);
constexpr uint32_t kInstrBytes = 8;

const char* op_name(Op op);

// Fixed 8-byte encoding:
//   [0] opcode  [1] rd  [2] ra  [3] bit7=imm-flag, bits0..6=rb  [4..7] imm32 LE
// Branch/JMP displacements are relative to the next instruction. CALLT
// carries a call-table index, CALLD an absolute address.
struct Instruction {
  Op op = Op::HALT;
  uint8_t rd = 0;
  uint8_t ra = 0;
  uint8_t rb = 0;
  bool use_imm = false;
  int32_t imm = 0;

  bool operator==(const Instruction&) const = default;
};

void encode(const Instruction& in, uint8_t out[kInstrBytes]);
bool decode(const uint8_t in[kInstrBytes], Instruction& out);  // false on invalid
std::vector<uint8_t> encode_all(const std::vector<Instruction>& prog);
std::vector<Instruction> decode_all(const std::vector<uint8_t>& code);  // throws on invalid

// Per-instruction base cost (no stall / fetch adjustments).
uint64_t instr_cost(const CostModel& m, Op op);

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

enum class StepKind : uint8_t { Continued, Faulted, Halted };

struct StepResult {
  StepKind kind = StepKind::Continued;
  Fault fault{};
};

// Executes exactly one instruction, or raises a fault with no side
// effects. Does not dispatch the fault hook; run() owns that.
StepResult step(ProcessState& p);

enum class RunExit : uint8_t { Halted, BudgetExceeded };

// Steps until halt, dispatching faults to the hook (charging the fault
// dispatch cost per delivery). Without a hook (or when the hook declines)
// the process halts with an error status.
RunExit run(ProcessState& p, uint64_t cycle_budget);

// COW fork. Child is Suspended; parent is charged the fork cost.
ProcessState vm_fork(ProcessState& parent);

}  // namespace hotreplay
