#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hotreplay {

// Structured error used across the library. `code` is a stable, machine
// readable tag; `what()` carries the human readable detail.
class Error : public std::runtime_error {
 public:
  enum class Code {
    BadMagic,
    BadVersion,
    Truncated,
    DigestMismatch,
    Unmapped,
    UnresolvedSymbol,
    HotRegionOverflow,
    PassInternal,
    LayoutMismatch,
    CaptureActive,
    CaptureLogOverflow,
    Io,
    Usage,
    Internal,
  };

  Error(Code code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

// Little-endian append-only byte writer. All on-disk formats go through
// this so the encoding is identical everywhere.
class ByteWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v) { raw(&v, 2); }
  void u32(uint32_t v) { raw(&v, 4); }
  void u64(uint64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void bytes(const uint8_t* p, size_t n) { buf_.insert(buf_.end(), p, p + n); }
  void bytes(const std::vector<uint8_t>& v) { bytes(v.data(), v.size()); }
  void str(std::string_view s) {
    u32(static_cast<uint32_t>(s.size()));
    bytes(reinterpret_cast<const uint8_t*>(s.data()), s.size());
  }

  const std::vector<uint8_t>& data() const { return buf_; }
  std::vector<uint8_t> take() { return std::move(buf_); }
  size_t size() const { return buf_.size(); }

 private:
  void raw(const void* p, size_t n) {
    // Host is little-endian on every supported target; memcpy keeps it
    // alignment-safe.
    const uint8_t* b = static_cast<const uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  std::vector<uint8_t> buf_;
};

// Bounds-checked little-endian reader. Throws Error::Truncated on
// overrun so corrupt files surface as structured errors.
class ByteReader {
 public:
  ByteReader(const uint8_t* p, size_t n) : p_(p), n_(n) {}
  explicit ByteReader(const std::vector<uint8_t>& v) : ByteReader(v.data(), v.size()) {}

  uint8_t u8() { return *need(1); }
  uint16_t u16() { return load<uint16_t>(); }
  uint32_t u32() { return load<uint32_t>(); }
  uint64_t u64() { return load<uint64_t>(); }
  double f64() { return load<double>(); }
  void bytes(uint8_t* dst, size_t n) { std::memcpy(dst, need(n), n); }
  std::vector<uint8_t> bytes(size_t n) {
    const uint8_t* p = need(n);
    return std::vector<uint8_t>(p, p + n);
  }
  std::string str() {
    uint32_t n = u32();
    const uint8_t* p = need(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }

  size_t pos() const { return pos_; }
  size_t remaining() const { return n_ - pos_; }

 private:
  template <typename T>
  T load() {
    T v;
    std::memcpy(&v, need(sizeof(T)), sizeof(T));
    return v;
  }
  const uint8_t* need(size_t n) {
    if (pos_ + n > n_) throw Error(Error::Code::Truncated, "unexpected end of data");
    const uint8_t* p = p_ + pos_;
    pos_ += n;
    return p;
  }
  const uint8_t* p_;
  size_t n_;
  size_t pos_ = 0;
};

// SHA-256. Used for image content digests, layout digests and snapshot
// file digests.
struct Sha256 {
  using Digest = std::array<uint8_t, 32>;

  Sha256();
  void update(const uint8_t* p, size_t n);
  void update(const std::vector<uint8_t>& v) { update(v.data(), v.size()); }
  void update(std::string_view s) { update(reinterpret_cast<const uint8_t*>(s.data()), s.size()); }
  Digest finish();

  static Digest of(const uint8_t* p, size_t n) {
    Sha256 h;
    h.update(p, n);
    return h.finish();
  }
  static Digest of(const std::vector<uint8_t>& v) { return of(v.data(), v.size()); }
  static std::string hex(const Digest& d);

 private:
  void block(const uint8_t* p);
  uint32_t state_[8];
  uint64_t length_ = 0;
  uint8_t pending_[64];
  size_t pending_len_ = 0;
};

std::vector<uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<uint8_t>& data);
void write_file(const std::string& path, const std::string& text);

}  // namespace hotreplay
