#include "hotreplay/vm.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>

namespace hotreplay {

const CostModel& default_cost_model() {
  static const CostModel m{};
  return m;
}

const char* region_kind_name(RegionKind k) {
  switch (k) {
    case RegionKind::Code: return "code";
    case RegionKind::Globals: return "globals";
    case RegionKind::Heap: return "heap";
    case RegionKind::Stack: return "stack";
    case RegionKind::SharedLog: return "sharedlog";
  }
  return "?";
}

const char* exit_info_name(ExitInfo e) {
  switch (e) {
    case ExitInfo::None: return "none";
    case ExitInfo::Ok: return "ok";
    case ExitInfo::DivByZero: return "div-by-zero";
    case ExitInfo::InvalidInstruction: return "invalid-instruction";
    case ExitInfo::UnhandledFault: return "unhandled-fault";
    case ExitInfo::BadCallIndex: return "bad-call-index";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// FrameStore
// ---------------------------------------------------------------------------

FrameStore::FrameStore() {
  // Frame 0: the pinned zero frame backing untouched pages.
  Slot z;
  z.page = std::make_unique<Page>();
  z.page->data.fill(0);
  z.refcount = 1;  // the store's own pin
  slots_.push_back(std::move(z));
  live_ = 1;
}

FrameId FrameStore::grab_slot() {
  if (!free_.empty()) {
    FrameId f = free_.back();
    free_.pop_back();
    ++live_;
    return f;
  }
  slots_.emplace_back();
  slots_.back().page = std::make_unique<Page>();
  ++live_;
  return FrameId(slots_.size() - 1);
}

FrameId FrameStore::alloc_zero() {
  FrameId f = grab_slot();
  slots_[f].page->data.fill(0);
  slots_[f].refcount = 1;
  return f;
}

FrameId FrameStore::alloc_bytes(const uint8_t* p, size_t n) {
  FrameId f = grab_slot();
  auto& d = slots_[f].page->data;
  n = std::min(n, size_t(kPageSize));
  std::memcpy(d.data(), p, n);
  if (n < kPageSize) std::memset(d.data() + n, 0, kPageSize - n);
  slots_[f].refcount = 1;
  return f;
}

FrameId FrameStore::alloc_copy(FrameId src) {
  FrameId f = grab_slot();
  slots_[f].page->data = slots_[src].page->data;
  slots_[f].refcount = 1;
  return f;
}

void FrameStore::add_ref(FrameId f) { ++slots_[f].refcount; }

void FrameStore::release(FrameId f) {
  auto& s = slots_[f];
  if (--s.refcount == 0) {
    free_.push_back(f);
    --live_;
  }
}

void FrameStore::unregister_space(const AddressSpace* s) {
  spaces_.erase(std::remove(spaces_.begin(), spaces_.end(), s), spaces_.end());
}

bool FrameStore::validate_refcounts(std::string* why) const {
  std::vector<uint64_t> counted(slots_.size(), 0);
  counted[0] = 1;  // zero-frame pin
  for (const AddressSpace* sp : spaces_) {
    for (const auto& m : sp->maps_) {
      for (const auto& pte : m.ptes) counted[pte.frame]++;
    }
  }
  for (size_t f = 0; f < slots_.size(); ++f) {
    if (slots_[f].refcount != counted[f]) {
      if (why) {
        std::ostringstream os;
        os << "frame " << f << ": refcount " << slots_[f].refcount
           << " but " << counted[f] << " references";
        *why = os.str();
      }
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// AddressSpace
// ---------------------------------------------------------------------------

AddressSpace::AddressSpace(std::shared_ptr<FrameStore> store) : store_(std::move(store)) {
  store_->register_space(this);
}

AddressSpace::~AddressSpace() {
  if (!store_) return;
  for (auto& m : maps_) {
    for (auto& pte : m.ptes) store_->release(pte.frame);
  }
  store_->unregister_space(this);
}

AddressSpace::AddressSpace(AddressSpace&& o) noexcept
    : store_(std::move(o.store_)),
      maps_(std::move(o.maps_)),
      mapped_pages_(o.mapped_pages_) {
  o.maps_.clear();
  o.mapped_pages_ = 0;
  if (store_) {
    store_->unregister_space(&o);
    store_->register_space(this);
  }
}

AddressSpace& AddressSpace::operator=(AddressSpace&& o) noexcept {
  if (this == &o) return *this;
  if (store_) {
    for (auto& m : maps_) {
      for (auto& pte : m.ptes) store_->release(pte.frame);
    }
    store_->unregister_space(this);
  }
  store_ = std::move(o.store_);
  maps_ = std::move(o.maps_);
  mapped_pages_ = o.mapped_pages_;
  o.maps_.clear();
  o.mapped_pages_ = 0;
  if (store_) {
    store_->unregister_space(&o);
    store_->register_space(this);
  }
  return *this;
}

void AddressSpace::insert_sorted(Mapped&& m) {
  // Regions must be page aligned, sized in pages, and disjoint.
  if ((m.region.start & kPageMask) != 0 || m.region.length == 0 ||
      (m.region.length & kPageMask) != 0) {
    throw Error(Error::Code::Internal, "region must be page aligned and page sized");
  }
  for (const auto& e : maps_) {
    if (m.region.start < e.region.end() && e.region.start < m.region.end()) {
      throw Error(Error::Code::Internal, "region overlap");
    }
  }
  auto it = std::upper_bound(maps_.begin(), maps_.end(), m.region.start,
                             [](Vaddr a, const Mapped& x) { return a < x.region.start; });
  mapped_pages_ += m.region.page_count();
  maps_.insert(it, std::move(m));
  last_hit_ = 0;
}

void AddressSpace::map_region(const Region& r, bool shared) {
  Mapped m;
  m.region = r;
  m.shared = shared;
  m.ptes.resize(r.page_count());
  for (auto& pte : m.ptes) {
    if (shared) {
      pte.frame = store_->alloc_zero();
      pte.shared = true;
      pte.cow = false;
    } else {
      pte.frame = store_->zero_frame();
      store_->add_ref(pte.frame);
      pte.cow = true;
    }
    pte.prot = Protection::ReadWrite;
  }
  insert_sorted(std::move(m));
}

void AddressSpace::map_region_bytes(const Region& r, const std::vector<uint8_t>& init) {
  Mapped m;
  m.region = r;
  m.ptes.resize(r.page_count());
  for (size_t i = 0; i < m.ptes.size(); ++i) {
    size_t off = i * kPageSize;
    if (off < init.size()) {
      size_t n = std::min(size_t(kPageSize), init.size() - off);
      m.ptes[i].frame = store_->alloc_bytes(init.data() + off, n);
      m.ptes[i].cow = false;
    } else {
      m.ptes[i].frame = store_->zero_frame();
      store_->add_ref(m.ptes[i].frame);
      m.ptes[i].cow = true;
    }
    m.ptes[i].prot = Protection::ReadWrite;
  }
  insert_sorted(std::move(m));
}

void AddressSpace::grow_region(Vaddr region_start, uint64_t extra_bytes) {
  if ((extra_bytes & kPageMask) != 0) {
    throw Error(Error::Code::Internal, "growth must be page sized");
  }
  for (size_t i = 0; i < maps_.size(); ++i) {
    if (maps_[i].region.start != region_start) continue;
    Vaddr new_end = maps_[i].region.end() + extra_bytes;
    if (i + 1 < maps_.size() && new_end > maps_[i + 1].region.start) {
      throw Error(Error::Code::Internal, "growth collides with next region");
    }
    uint64_t extra_pages = extra_bytes / kPageSize;
    for (uint64_t k = 0; k < extra_pages; ++k) {
      PageTableEntry pte;
      pte.frame = store_->zero_frame();
      store_->add_ref(pte.frame);
      pte.cow = true;
      pte.prot = Protection::ReadWrite;
      maps_[i].ptes.push_back(pte);
    }
    maps_[i].region.length += extra_bytes;
    mapped_pages_ += extra_pages;
    return;
  }
  throw Error(Error::Code::Unmapped, "no region starts at given address");
}

void AddressSpace::unmap_region(Vaddr region_start) {
  for (size_t i = 0; i < maps_.size(); ++i) {
    if (maps_[i].region.start != region_start) continue;
    for (auto& pte : maps_[i].ptes) store_->release(pte.frame);
    mapped_pages_ -= maps_[i].region.page_count();
    maps_.erase(maps_.begin() + long(i));
    last_hit_ = 0;
    return;
  }
  throw Error(Error::Code::Unmapped, "no region starts at given address");
}

std::vector<Region> AddressSpace::regions() const {
  std::vector<Region> out;
  out.reserve(maps_.size());
  for (const auto& m : maps_) out.push_back(m.region);
  return out;
}

uint64_t AddressSpace::mapped_data_bytes() const {
  uint64_t n = 0;
  for (const auto& m : maps_) {
    if (is_data_kind(m.region.kind)) n += m.region.length;
  }
  return n;
}

AddressSpace::Mapped* AddressSpace::find(Vaddr a) {
  return const_cast<Mapped*>(static_cast<const AddressSpace*>(this)->find(a));
}

const AddressSpace::Mapped* AddressSpace::find(Vaddr a) const {
  if (last_hit_ < maps_.size() && maps_[last_hit_].region.contains(a)) {
    return &maps_[last_hit_];
  }
  for (size_t i = 0; i < maps_.size(); ++i) {
    if (maps_[i].region.contains(a)) {
      last_hit_ = i;
      return &maps_[i];
    }
  }
  return nullptr;
}

const Region* AddressSpace::region_at(Vaddr a) const {
  const Mapped* m = find(a);
  return m ? &m->region : nullptr;
}

const PageTableEntry* AddressSpace::pte_at(Vaddr a) const {
  const Mapped* m = find(a);
  if (!m) return nullptr;
  return &m->ptes[(a - m->region.start) / kPageSize];
}

uint8_t* AddressSpace::writable_page(Mapped& m, size_t page_idx) {
  PageTableEntry& pte = m.ptes[page_idx];
  if (pte.cow) {
    if (store_->refcount(pte.frame) > 1) {
      FrameId fresh = store_->alloc_copy(pte.frame);
      store_->release(pte.frame);
      pte.frame = fresh;
    }
    pte.cow = false;
  }
  return store_->data(pte.frame);
}

std::optional<Fault> AddressSpace::guest_read(Vaddr a, uint8_t* dst, uint32_t len) {
  // Check every page in the span before touching anything.
  Vaddr p = a;
  while (p < a + len) {
    const Mapped* m = find(p);
    if (!m) return Fault{p, AccessType::Read, FaultKind::Unmapped};
    const PageTableEntry& pte = m->ptes[(p - m->region.start) / kPageSize];
    if (pte.prot == Protection::None) return Fault{p, AccessType::Read, FaultKind::Protection};
    p = page_base(p) + kPageSize;
  }
  Vaddr cur = a;
  uint32_t left = len;
  while (left > 0) {
    const Mapped* m = find(cur);
    uint64_t off = cur - m->region.start;
    uint64_t in_page = kPageSize - (cur & kPageMask);
    uint32_t n = uint32_t(std::min<uint64_t>(left, in_page));
    std::memcpy(dst, store_->data(m->ptes[off / kPageSize].frame) + (cur & kPageMask), n);
    dst += n;
    cur += n;
    left -= n;
  }
  return std::nullopt;
}

std::optional<Fault> AddressSpace::guest_write(Vaddr a, const uint8_t* src, uint32_t len) {
  Vaddr p = a;
  while (p < a + len) {
    const Mapped* m = find(p);
    if (!m) return Fault{p, AccessType::Write, FaultKind::Unmapped};
    const PageTableEntry& pte = m->ptes[(p - m->region.start) / kPageSize];
    if (pte.prot != Protection::ReadWrite) return Fault{p, AccessType::Write, FaultKind::Protection};
    p = page_base(p) + kPageSize;
  }
  Vaddr cur = a;
  uint32_t left = len;
  while (left > 0) {
    Mapped* m = find(cur);
    uint64_t page_idx = (cur - m->region.start) / kPageSize;
    uint64_t in_page = kPageSize - (cur & kPageMask);
    uint32_t n = uint32_t(std::min<uint64_t>(left, in_page));
    std::memcpy(writable_page(*m, page_idx) + (cur & kPageMask), src, n);
    src += n;
    cur += n;
    left -= n;
  }
  return std::nullopt;
}

std::optional<Fault> AddressSpace::guest_read_u64(Vaddr a, uint64_t& out) {
  if ((a & 7) != 0) {
    return guest_read(a, reinterpret_cast<uint8_t*>(&out), 8);
  }
  const Mapped* m = find(a);
  if (!m) return Fault{a, AccessType::Read, FaultKind::Unmapped};
  const PageTableEntry& pte = m->ptes[(a - m->region.start) / kPageSize];
  if (pte.prot == Protection::None) return Fault{a, AccessType::Read, FaultKind::Protection};
  std::memcpy(&out, store_->data(pte.frame) + (a & kPageMask), 8);
  return std::nullopt;
}

std::optional<Fault> AddressSpace::guest_write_u64_checked(Vaddr a, uint64_t v) {
  if ((a & 7) != 0) {
    return guest_write(a, reinterpret_cast<const uint8_t*>(&v), 8);
  }
  Mapped* m = find(a);
  if (!m) return Fault{a, AccessType::Write, FaultKind::Unmapped};
  uint64_t page_idx = (a - m->region.start) / kPageSize;
  const PageTableEntry& pte = m->ptes[page_idx];
  if (pte.prot != Protection::ReadWrite) return Fault{a, AccessType::Write, FaultKind::Protection};
  std::memcpy(writable_page(*m, page_idx) + (a & kPageMask), &v, 8);
  return std::nullopt;
}

const uint8_t* AddressSpace::fetch_ptr(Vaddr a, uint32_t len) const {
  const Mapped* m = find(a);
  if (!m) return nullptr;
  uint64_t off_in_page = a & kPageMask;
  if (off_in_page + len > kPageSize) {
    // spanning fetch: only valid when the next page is mapped too
    if (!is_mapped(a + len - 1)) return nullptr;
    return nullptr;  // callers fall back to the slow path
  }
  const PageTableEntry& pte = m->ptes[(a - m->region.start) / kPageSize];
  return store_->data(pte.frame) + off_in_page;
}

void AddressSpace::host_read(Vaddr a, uint8_t* dst, uint64_t len) const {
  Vaddr cur = a;
  uint64_t left = len;
  while (left > 0) {
    const Mapped* m = find(cur);
    if (!m) throw Error(Error::Code::Unmapped, "host_read of unmapped address");
    uint64_t page_idx = (cur - m->region.start) / kPageSize;
    uint64_t in_page = kPageSize - (cur & kPageMask);
    uint64_t n = std::min<uint64_t>(left, in_page);
    std::memcpy(dst, store_->data(m->ptes[page_idx].frame) + (cur & kPageMask), n);
    dst += n;
    cur += n;
    left -= n;
  }
}

std::vector<uint8_t> AddressSpace::host_read(Vaddr a, uint64_t len) const {
  std::vector<uint8_t> out(len);
  host_read(a, out.data(), len);
  return out;
}

void AddressSpace::host_write(Vaddr a, const uint8_t* src, uint64_t len) {
  Vaddr cur = a;
  uint64_t left = len;
  while (left > 0) {
    Mapped* m = find(cur);
    if (!m) throw Error(Error::Code::Unmapped, "host_write of unmapped address");
    uint64_t page_idx = (cur - m->region.start) / kPageSize;
    uint64_t in_page = kPageSize - (cur & kPageMask);
    uint64_t n = std::min<uint64_t>(left, in_page);
    std::memcpy(writable_page(*m, page_idx) + (cur & kPageMask), src, n);
    src += n;
    cur += n;
    left -= n;
  }
}

uint64_t AddressSpace::host_read_u64(Vaddr a) const {
  uint64_t v;
  host_read(a, reinterpret_cast<uint8_t*>(&v), 8);
  return v;
}

void AddressSpace::host_write_u64(Vaddr a, uint64_t v) {
  host_write(a, reinterpret_cast<const uint8_t*>(&v), 8);
}

void AddressSpace::set_protection(Vaddr start, uint64_t length, Protection prot) {
  Vaddr lo = page_base(start);
  Vaddr hi = page_base(start + length + kPageSize - 1);
  for (Vaddr p = lo; p < hi; p += kPageSize) {
    Mapped* m = find(p);
    if (!m) throw Error(Error::Code::Unmapped, "set_protection on unmapped page");
    m->ptes[(p - m->region.start) / kPageSize].prot = prot;
  }
}

Protection AddressSpace::protection_at(Vaddr a) const {
  const PageTableEntry* pte = pte_at(a);
  if (!pte) throw Error(Error::Code::Unmapped, "protection_at on unmapped page");
  return pte->prot;
}

AddressSpace AddressSpace::fork_clone() {
  AddressSpace child(store_);
  child.maps_.reserve(maps_.size());
  for (auto& m : maps_) {
    Mapped c;
    c.region = m.region;
    c.shared = m.shared;
    c.ptes = m.ptes;
    for (size_t i = 0; i < c.ptes.size(); ++i) {
      store_->add_ref(c.ptes[i].frame);
      if (!m.shared) {
        m.ptes[i].cow = true;
        c.ptes[i].cow = true;
      }
    }
    child.mapped_pages_ += c.region.page_count();
    child.maps_.push_back(std::move(c));
  }
#ifndef NDEBUG
  std::string why;
  if (!store_->validate_refcounts(&why)) throw Error(Error::Code::Internal, "fork: " + why);
#endif
  return child;
}

// ---------------------------------------------------------------------------
// Instruction codec
// ---------------------------------------------------------------------------

const char* op_name(Op op) {
  switch (op) {
    case Op::LDI: return "LDI";
    case Op::MOV: return "MOV";
    case Op::ADD: return "ADD";
    case Op::SUB: return "SUB";
    case Op::MUL: return "MUL";
    case Op::DIV: return "DIV";
    case Op::AND: return "AND";
    case Op::OR: return "OR";
    case Op::XOR: return "XOR";
    case Op::SHL: return "SHL";
    case Op::SHR: return "SHR";
    case Op::LD: return "LD";
    case Op::ST: return "ST";
    case Op::JMP: return "JMP";
    case Op::BEQ: return "BEQ";
    case Op::BNE: return "BNE";
    case Op::BLT: return "BLT";
    case Op::CALLT: return "CALLT";
    case Op::CALLD: return "CALLD";
    case Op::RET: return "RET";
    case Op::HALT: return "HALT";
  }
  return "?";
}

void encode(const Instruction& in, uint8_t out[kInstrBytes]) {
  out[0] = uint8_t(in.op);
  out[1] = in.rd;
  out[2] = in.ra;
  out[3] = uint8_t((in.use_imm ? 0x80 : 0) | (in.rb & 0x7f));
  uint32_t imm = uint32_t(in.imm);
  out[4] = uint8_t(imm);
  out[5] = uint8_t(imm >> 8);
  out[6] = uint8_t(imm >> 16);
  out[7] = uint8_t(imm >> 24);
}

bool decode(const uint8_t in[kInstrBytes], Instruction& out) {
  if (in[0] < 1 || in[0] > kMaxOpcode) return false;
  out.op = Op(in[0]);
  out.rd = in[1];
  out.ra = in[2];
  out.use_imm = (in[3] & 0x80) != 0;
  out.rb = uint8_t(in[3] & 0x7f);
  out.imm = int32_t(uint32_t(in[4]) | (uint32_t(in[5]) << 8) | (uint32_t(in[6]) << 16) |
                    (uint32_t(in[7]) << 24));
  if (out.rd > kSpReg || out.ra > kSpReg) return false;
  if (out.use_imm ? out.rb != 0 : out.rb > kSpReg) return false;
  return true;
}

std::vector<uint8_t> encode_all(const std::vector<Instruction>& prog) {
  std::vector<uint8_t> out(prog.size() * kInstrBytes);
  for (size_t i = 0; i < prog.size(); ++i) encode(prog[i], out.data() + i * kInstrBytes);
  return out;
}

std::vector<Instruction> decode_all(const std::vector<uint8_t>& code) {
  if (code.size() % kInstrBytes != 0) {
    throw Error(Error::Code::Internal, "code size not a multiple of 8");
  }
  std::vector<Instruction> out(code.size() / kInstrBytes);
  for (size_t i = 0; i < out.size(); ++i) {
    if (!decode(code.data() + i * kInstrBytes, out[i])) {
      throw Error(Error::Code::Internal, "invalid instruction at offset " + std::to_string(i * 8));
    }
  }
  return out;
}

uint64_t instr_cost(const CostModel& m, Op op) {
  switch (op) {
    case Op::MUL: return m.mul;
    case Op::DIV: return m.div;
    case Op::LD:
    case Op::ST: return m.mem;
    case Op::CALLT:
    case Op::CALLD: return m.call;
    case Op::RET: return m.ret;
    default: return m.base;
  }
}

// ---------------------------------------------------------------------------
// Interpreter
// ---------------------------------------------------------------------------

namespace {

inline bool in_big_function(const ProcessState& p, Vaddr pc) {
  for (const auto& e : p.big_functions) {
    if (pc >= e.start && pc < e.end) return true;
    if (pc < e.start) break;
  }
  return false;
}

}  // namespace

struct StepImpl {
  static StepResult go(ProcessState& p) {
    if (p.status != ProcStatus::Running) return {StepKind::Halted, {}};

    const CostModel& cm = *p.cost;
    RegisterFile& rf = p.regs;
    AddressSpace& as = p.space();

    // Instruction fetch ignores data protection but requires mapping.
    uint8_t buf[kInstrBytes];
    const uint8_t* raw = as.fetch_ptr(rf.pc, kInstrBytes);
    if (!raw) {
      Vaddr a = rf.pc;
      if (!as.is_mapped(a)) {
        return {StepKind::Faulted, Fault{a, AccessType::Read, FaultKind::Unmapped}};
      }
      if (!as.is_mapped(a + kInstrBytes - 1)) {
        return {StepKind::Faulted,
                Fault{page_base(a) + kPageSize, AccessType::Read, FaultKind::Unmapped}};
      }
      as.host_read(a, buf, kInstrBytes);
      raw = buf;
    }

    Instruction in;
    if (!decode(raw, in)) {
      p.halt(ExitInfo::InvalidInstruction);
      return {StepKind::Halted, {}};
    }

    uint64_t cost = instr_cost(cm, in.op);
    if (in.op == Op::LD && p.last_was_store_) cost += cm.store_load_stall;
    if (!p.big_functions.empty() && in_big_function(p, rf.pc)) cost += cm.fetch_penalty;

    Vaddr pc0 = rf.pc;
    Vaddr next = rf.pc + kInstrBytes;
    bool stored = false;

    auto finish = [&](Vaddr new_pc) -> StepResult {
      rf.pc = new_pc;
      rf.cycles += cost;
      p.last_was_store_ = stored;
      if (p.trace) p.trace->on_exec(pc0, uint8_t(in.op), rf.cycles);
      return {StepKind::Continued, {}};
    };

    switch (in.op) {
      case Op::LDI:
        rf.set(in.rd, uint64_t(int64_t(in.imm)));
        return finish(next);
      case Op::MOV:
        rf.set(in.rd, rf.get(in.ra));
        return finish(next);
      case Op::ADD:
      case Op::SUB:
      case Op::MUL:
      case Op::DIV:
      case Op::AND:
      case Op::OR:
      case Op::XOR:
      case Op::SHL:
      case Op::SHR: {
        uint64_t x = rf.get(in.ra);
        uint64_t y = in.use_imm ? uint64_t(int64_t(in.imm)) : rf.get(in.rb);
        uint64_t v = 0;
        switch (in.op) {
          case Op::ADD: v = x + y; break;
          case Op::SUB: v = x - y; break;
          case Op::MUL: v = x * y; break;
          case Op::DIV:
            if (y == 0) {
              p.halt(ExitInfo::DivByZero);
              return {StepKind::Halted, {}};
            }
            v = x / y;
            break;
          case Op::AND: v = x & y; break;
          case Op::OR: v = x | y; break;
          case Op::XOR: v = x ^ y; break;
          case Op::SHL: v = x << (y & 63); break;
          case Op::SHR: v = x >> (y & 63); break;
          default: break;
        }
        rf.set(in.rd, v);
        return finish(next);
      }
      case Op::LD: {
        Vaddr addr = rf.get(in.ra) + uint64_t(int64_t(in.imm));
        uint64_t v;
        if (auto f = as.guest_read_u64(addr, v)) {
          return {StepKind::Faulted, *f};
        }
        rf.set(in.rd, v);
        if (p.trace) p.trace->on_mem(addr, 8, false);
        return finish(next);
      }
      case Op::ST: {
        Vaddr addr = rf.get(in.ra) + uint64_t(int64_t(in.imm));
        if (auto f = as.guest_write_u64_checked(addr, rf.get(in.rd))) {
          return {StepKind::Faulted, *f};
        }
        stored = true;
        if (p.trace) p.trace->on_mem(addr, 8, true);
        return finish(next);
      }
      case Op::JMP:
        return finish(next + uint64_t(int64_t(in.imm)));
      case Op::BEQ:
      case Op::BNE:
      case Op::BLT: {
        uint64_t x = rf.get(in.rd);
        uint64_t y = rf.get(in.ra);
        bool taken = in.op == Op::BEQ ? x == y : in.op == Op::BNE ? x != y : x < y;
        return finish(taken ? next + uint64_t(int64_t(in.imm)) : next);
      }
      case Op::CALLT:
      case Op::CALLD: {
        Vaddr target;
        if (in.op == Op::CALLT) {
          uint32_t idx = uint32_t(in.imm);
          if (idx >= p.call_table_slots) {
            p.halt(ExitInfo::BadCallIndex);
            return {StepKind::Halted, {}};
          }
          // Table reads are fetch-like: they bypass data protection.
          target = as.host_read_u64(p.call_table_base + uint64_t(idx) * 8);
        } else {
          target = uint64_t(uint32_t(in.imm));
        }
        Vaddr slot = rf.sp - 8;
        if (auto f = as.guest_write_u64_checked(slot, next)) {
          return {StepKind::Faulted, *f};
        }
        stored = true;
        if (p.trace) p.trace->on_mem(slot, 8, true);
        rf.sp = slot;
        return finish(target);
      }
      case Op::RET: {
        uint64_t ret;
        if (auto f = as.guest_read_u64(rf.sp, ret)) {
          return {StepKind::Faulted, *f};
        }
        if (p.trace) p.trace->on_mem(rf.sp, 8, false);
        rf.sp += 8;
        return finish(ret);
      }
      case Op::HALT:
        rf.cycles += cost;
        p.last_was_store_ = false;
        if (p.trace) p.trace->on_exec(pc0, uint8_t(in.op), rf.cycles);
        p.halt(ExitInfo::Ok);
        return {StepKind::Halted, {}};
    }
    p.halt(ExitInfo::InvalidInstruction);
    return {StepKind::Halted, {}};
  }
};

StepResult step(ProcessState& p) { return StepImpl::go(p); }

RunExit run(ProcessState& p, uint64_t cycle_budget) {
  while (p.status == ProcStatus::Running) {
    if (p.regs.cycles > cycle_budget) return RunExit::BudgetExceeded;
    StepResult r = step(p);
    if (r.kind == StepKind::Faulted) {
      if (p.fault_hook) {
        p.regs.cycles += p.cost->fault_dispatch;
        if (p.fault_hook(p, r.fault)) continue;
      }
      p.halt(ExitInfo::UnhandledFault);
      return RunExit::Halted;
    }
    if (r.kind == StepKind::Halted) return RunExit::Halted;
  }
  return RunExit::Halted;
}

ProcessState vm_fork(ProcessState& parent) {
  ProcessState child(parent.space().fork_clone());
  child.regs = parent.regs;
  child.status = ProcStatus::Suspended;
  child.exit = ExitInfo::None;
  child.cost = parent.cost;
  child.call_table_base = parent.call_table_base;
  child.call_table_slots = parent.call_table_slots;
  child.big_functions = parent.big_functions;
  child.last_was_store_ = parent.last_was_store_;
  parent.regs.cycles +=
      parent.cost->fork_base + parent.cost->fork_per_page * parent.space().mapped_pages();
  return child;
}

}  // namespace hotreplay
