#pragma once

#include <cmath>
#include <cstdint>

namespace hotreplay {

// Deterministic PRNG with an explicit, libc-independent state transition.
// The standard <random> distributions are not bit-stable across library
// implementations, and search reports must be byte-identical for a given
// seed, so all draws go through this.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t s = seed;
    for (auto& w : s_) w = splitmix64(s);
  }

  // Derives an independent stream, e.g. per-variant noise streams from
  // (master_seed, variant index).
  static Rng derive(uint64_t seed, uint64_t stream) {
    uint64_t s = seed ^ (0xa0761d6478bd642fULL * (stream + 1));
    return Rng(splitmix64(s));
  }

  uint64_t next() {
    // xoshiro256**
    auto rotl = [](uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
    uint64_t result = rotl(s_[1] * 5, 7) * 9;
    uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }

  // Fair coin.
  bool coin() { return (next() >> 63) != 0; }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n) { return n == 0 ? 0 : next() % n; }

  // Standard normal draw (Box-Muller, one value per call).
  double gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 0x1.0p-60) u1 = 0x1.0p-60;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

 private:
  uint64_t s_[4];
};

}  // namespace hotreplay
