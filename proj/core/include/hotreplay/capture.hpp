#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hotreplay/image.hpp"

namespace hotreplay {

struct CaptureStats {
  uint64_t pages_captured = 0;
  uint64_t fault_count = 0;
  uint64_t full_state_bytes = 0;   // all mapped data bytes, the full-capture baseline
  uint64_t snapshot_bytes = 0;     // serialized snapshot size
  uint64_t capture_overhead_cycles = 0;  // VMA parse + fork + faults * dispatch
  uint64_t vma_cycles = 0;
  uint64_t fork_cycles = 0;
};

// Registers plus the exact pre-invocation contents of every data page the
// hot function touched.
struct Snapshot {
  std::string benchmark;
  std::string hot_function;
  RegisterFile entry_registers;
  std::vector<std::pair<uint64_t, std::vector<uint8_t>>> pages;  // (vpn, 4096 B), sorted
  Sha256::Digest layout_digest{};

  std::optional<std::vector<uint8_t>> page(uint64_t vpn) const;
};

// Walks the process's mapped regions (sorted, disjoint) and charges the
// cost-model VMA parse cycles.
std::vector<Region> enumerate_vmas(ProcessState& p);

// One in-flight capture. Construction runs the arm protocol: enumerate
// VMAs, map the shared fault log, fork a suspended child, revoke access
// to all data pages and install the fault hook on the parent. The parent
// then runs normally; each first touch of a page faults once, gets logged
// and has its rights restored. finalize() has the child persist its COW
// copies of exactly the logged pages.
class CaptureSession {
 public:
  static constexpr Vaddr kSharedLogBase = 0x7ffe'0000ull;
  static constexpr uint64_t kSharedLogPages = 16;
  static constexpr uint64_t kSharedLogCapacity = (kSharedLogPages * kPageSize - 8) / 8;

  CaptureSession(ProcessState& parent, Vaddr hot_entry, Sha256::Digest layout_dig,
                 std::string benchmark, std::string hot_function);
  ~CaptureSession();

  CaptureSession(const CaptureSession&) = delete;
  CaptureSession& operator=(const CaptureSession&) = delete;

  // Installed as the parent's fault hook; exposed for direct protocol tests.
  bool on_fault(ProcessState& p, const Fault& f);

  // Parent's hot function has returned: child persists the logged pages,
  // parent protections are fully restored, the session disarms.
  std::pair<Snapshot, CaptureStats> finalize();

  bool finalized() const { return finalized_; }
  const std::vector<uint64_t>& accessed_vpns() const { return accessed_; }  // first-touch order
  const RegisterFile& entry_registers() const { return entry_regs_; }
  const CaptureStats& stats() const { return stats_; }
  const ProcessState& child() const { return *child_; }

 private:
  void disarm();

  ProcessState& parent_;
  std::unique_ptr<ProcessState> child_;
  Sha256::Digest layout_digest_;
  std::string benchmark_;
  std::string hot_function_;
  RegisterFile entry_regs_;
  std::vector<uint64_t> accessed_;
  std::unordered_set<uint64_t> accessed_set_;
  std::unordered_map<uint64_t, Protection> prior_prot_;  // vpn -> pre-revocation rights
  std::vector<Region> data_regions_;
  CaptureStats stats_;
  bool finalized_ = false;
  bool armed_ = false;
};

std::unique_ptr<CaptureSession> begin_capture(ProcessState& parent, Vaddr hot_entry,
                                              Sha256::Digest layout_dig, std::string benchmark,
                                              std::string hot_function);

// Snapshot file, little-endian, magic "HRSN". Bit-exact round trip.
std::vector<uint8_t> serialize_snapshot(const Snapshot& s);
Snapshot deserialize_snapshot(const std::vector<uint8_t>& bytes);
void save_snapshot(const Snapshot& s, const std::string& path);
Snapshot load_snapshot(const std::string& path);

}  // namespace hotreplay
