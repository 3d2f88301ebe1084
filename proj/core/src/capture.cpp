#include "hotreplay/capture.hpp"

#include <algorithm>
#include <cstring>

namespace hotreplay {

namespace {
constexpr char kMagic[4] = {'H', 'R', 'S', 'N'};
constexpr uint16_t kVersion = 1;
}  // namespace

std::optional<std::vector<uint8_t>> Snapshot::page(uint64_t vpn) const {
  for (const auto& [v, bytes] : pages) {
    if (v == vpn) return bytes;
  }
  return std::nullopt;
}

std::vector<Region> enumerate_vmas(ProcessState& p) {
  std::vector<Region> rs = p.space().regions();
  p.regs.cycles += p.cost->vma_per_region * rs.size();
  return rs;
}

CaptureSession::CaptureSession(ProcessState& parent, Vaddr hot_entry, Sha256::Digest layout_dig,
                               std::string benchmark, std::string hot_function)
    : parent_(parent),
      layout_digest_(layout_dig),
      benchmark_(std::move(benchmark)),
      hot_function_(std::move(hot_function)) {
  if (parent.capture_active) {
    throw Error(Error::Code::CaptureActive, "a capture is already in flight for this process");
  }
  if (parent.regs.pc != hot_entry) {
    throw Error(Error::Code::Internal, "parent is not at the hot function entry");
  }

  entry_regs_ = parent.regs;  // frozen at hot entry, before protocol costs

  // Protocol order: walk the VMA list, map the shared fault log, fork,
  // then strip access rights from every data page of the parent.
  std::vector<Region> all = enumerate_vmas(parent);
  stats_.vma_cycles = parent.cost->vma_per_region * all.size();
  for (const auto& r : all) {
    if (is_data_kind(r.kind)) data_regions_.push_back(r);
  }

  parent.space().map_region({kSharedLogBase, kSharedLogPages * kPageSize, RegionKind::SharedLog},
                            /*shared=*/true);
  parent.space().host_write_u64(kSharedLogBase, 0);

  uint64_t cycles_before = parent.regs.cycles;
  child_ = std::make_unique<ProcessState>(vm_fork(parent));
  stats_.fork_cycles = parent.regs.cycles - cycles_before;

  for (const auto& r : data_regions_) {
    for (Vaddr a = r.start; a < r.end(); a += kPageSize) {
      prior_prot_[page_of(a)] = parent.space().protection_at(a);
    }
    parent.space().set_protection(r.start, r.length, Protection::None);
  }

  parent.fault_hook = [this](ProcessState& p, const Fault& f) { return on_fault(p, f); };
  parent.capture_active = true;
  armed_ = true;
}

CaptureSession::~CaptureSession() {
  if (armed_) disarm();
}

void CaptureSession::disarm() {
  for (const auto& [vpn, prot] : prior_prot_) {
    parent_.space().set_protection(vpn * kPageSize, kPageSize, prot);
  }
  parent_.fault_hook = nullptr;
  parent_.capture_active = false;
  // Child goes first: it still references the shared log frames.
  child_.reset();
  parent_.space().unmap_region(kSharedLogBase);
  armed_ = false;
}

bool CaptureSession::on_fault(ProcessState& p, const Fault& f) {
  if (f.kind != FaultKind::Protection) return false;
  uint64_t vpn = page_of(f.vaddr);
  auto it = prior_prot_.find(vpn);
  if (it == prior_prot_.end()) return false;  // outside the captured regions

  stats_.fault_count++;
  if (!accessed_set_.count(vpn)) {
    uint64_t count = p.space().host_read_u64(kSharedLogBase);
    if (count >= kSharedLogCapacity) {
      throw Error(Error::Code::CaptureLogOverflow,
                  "shared fault log full; working set exceeds " +
                      std::to_string(kSharedLogCapacity) + " pages");
    }
    p.space().host_write_u64(kSharedLogBase + 8 + count * 8, vpn);
    p.space().host_write_u64(kSharedLogBase, count + 1);
    accessed_set_.insert(vpn);
    accessed_.push_back(vpn);
  }
  p.space().set_protection(vpn * kPageSize, kPageSize, it->second);
  return true;
}

std::pair<Snapshot, CaptureStats> CaptureSession::finalize() {
  if (finalized_) throw Error(Error::Code::Internal, "capture session already finalized");

  // Resume the child; it reads the accessed-page list from the shared log
  // and persists its own (pre-invocation) copies of those pages.
  child_->status = ProcStatus::Running;
  uint64_t count = child_->space().host_read_u64(kSharedLogBase);
  std::vector<uint64_t> vpns(count);
  for (uint64_t i = 0; i < count; ++i) {
    vpns[i] = child_->space().host_read_u64(kSharedLogBase + 8 + i * 8);
  }
  std::sort(vpns.begin(), vpns.end());

  // Stack pages below the entry-sp page hold no live data at entry and are
  // not part of the replayable state.
  uint64_t entry_sp_page = page_of(entry_regs_.sp);
  Snapshot snap;
  snap.benchmark = benchmark_;
  snap.hot_function = hot_function_;
  snap.entry_registers = entry_regs_;
  snap.layout_digest = layout_digest_;
  for (uint64_t vpn : vpns) {
    Vaddr base = vpn * kPageSize;
    const Region* r = child_->space().region_at(base);
    if (r && r->kind == RegionKind::Stack && vpn < entry_sp_page) continue;
    snap.pages.emplace_back(vpn, child_->space().host_read(base, kPageSize));
  }

  stats_.pages_captured = snap.pages.size();
  stats_.full_state_bytes = parent_.space().mapped_data_bytes();
  stats_.capture_overhead_cycles =
      stats_.vma_cycles + stats_.fork_cycles + stats_.fault_count * parent_.cost->fault_dispatch;
  stats_.snapshot_bytes = serialize_snapshot(snap).size();

  disarm();
  finalized_ = true;
  return {std::move(snap), stats_};
}

std::unique_ptr<CaptureSession> begin_capture(ProcessState& parent, Vaddr hot_entry,
                                              Sha256::Digest layout_dig, std::string benchmark,
                                              std::string hot_function) {
  return std::make_unique<CaptureSession>(parent, hot_entry, layout_dig, std::move(benchmark),
                                          std::move(hot_function));
}

std::vector<uint8_t> serialize_snapshot(const Snapshot& s) {
  ByteWriter w;
  w.bytes(reinterpret_cast<const uint8_t*>(kMagic), 4);
  w.u16(kVersion);
  w.str(s.benchmark);
  w.str(s.hot_function);
  for (Word r : s.entry_registers.r) w.u64(r);
  w.u64(s.entry_registers.pc);
  w.u64(s.entry_registers.sp);
  w.u64(s.entry_registers.cycles);
  w.u32(uint32_t(s.pages.size()));
  for (const auto& [vpn, bytes] : s.pages) {
    w.u64(vpn);
    w.bytes(bytes);
  }
  w.bytes(s.layout_digest.data(), s.layout_digest.size());
  std::vector<uint8_t> out = w.take();
  Sha256::Digest d = Sha256::of(out);
  out.insert(out.end(), d.begin(), d.end());
  return out;
}

Snapshot deserialize_snapshot(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 38) throw Error(Error::Code::Truncated, "snapshot file too short");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(Error::Code::BadMagic, "not a snapshot file");
  }
  Sha256::Digest want;
  std::memcpy(want.data(), bytes.data() + bytes.size() - 32, 32);
  if (Sha256::of(bytes.data(), bytes.size() - 32) != want) {
    throw Error(Error::Code::DigestMismatch, "snapshot file digest mismatch");
  }
  ByteReader r(bytes.data(), bytes.size() - 32);
  r.bytes(4);
  uint16_t ver = r.u16();
  if (ver != kVersion) throw Error(Error::Code::BadVersion, "snapshot version " + std::to_string(ver));
  Snapshot s;
  s.benchmark = r.str();
  s.hot_function = r.str();
  for (auto& reg : s.entry_registers.r) reg = r.u64();
  s.entry_registers.pc = r.u64();
  s.entry_registers.sp = r.u64();
  s.entry_registers.cycles = r.u64();
  uint32_t n = r.u32();
  uint64_t prev_vpn = 0;
  for (uint32_t i = 0; i < n; ++i) {
    uint64_t vpn = r.u64();
    if (i > 0 && vpn <= prev_vpn) {
      throw Error(Error::Code::Internal, "snapshot pages not sorted/unique");
    }
    prev_vpn = vpn;
    s.pages.emplace_back(vpn, r.bytes(kPageSize));
  }
  r.bytes(s.layout_digest.data(), 32);
  if (r.remaining() != 0) throw Error(Error::Code::Truncated, "trailing bytes in snapshot file");
  return s;
}

void save_snapshot(const Snapshot& s, const std::string& path) {
  write_file(path, serialize_snapshot(s));
}

Snapshot load_snapshot(const std::string& path) { return deserialize_snapshot(read_file(path)); }

}  // namespace hotreplay
