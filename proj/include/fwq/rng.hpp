#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace fwq {

// Philox4x32-10 counter-based generator (Salmon et al. constants).
// A generator is addressed by (seed, stream): seed fills the key,
// stream fills the upper counter words, so replicas with distinct
// stream ids draw from provably disjoint counter ranges.
class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t stream) {
    key_[0] = static_cast<std::uint32_t>(seed);
    key_[1] = static_cast<std::uint32_t>(seed >> 32);
    ctr_ = {0u, 0u, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    idx_ = 4;
    have_normal_ = false;
  }

  std::uint32_t next_u32() {
    if (idx_ == 4) refill();
    return buf_[idx_++];
  }

  std::uint64_t next_u64() {
    std::uint64_t lo = next_u32();
    std::uint64_t hi = next_u32();
    return lo | (hi << 32);
  }

  // Uniform on (0, 1]: (x+1) * 2^-32.
  double next_unit() { return (static_cast<double>(next_u32()) + 1.0) * 0x1p-32; }

  // Standard normal via an explicit Box-Muller pair (bit-deterministic;
  // std::normal_distribution is implementation-defined).
  double next_normal() {
    if (have_normal_) {
      have_normal_ = false;
      return cached_;
    }
    double u1 = next_unit();
    double u2 = next_unit();
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(th);
    have_normal_ = true;
    return r * std::cos(th);
  }

  // Uniform integer in [0, n), n >= 1 (rejection-free modulo; bias
  // negligible for the small n used by test generators).
  std::uint32_t next_below(std::uint32_t n) { return next_u32() % n; }

 private:
  static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(p);
    hi = static_cast<std::uint32_t>(p >> 32);
  }

  void refill() {
    std::array<std::uint32_t, 4> c = ctr_;
    std::uint32_t k0 = key_[0], k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      std::uint32_t lo0, hi0, lo1, hi1;
      mulhilo(0xD2511F53u, c[0], lo0, hi0);
      mulhilo(0xCD9E8D57u, c[2], lo1, hi1);
      c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    buf_ = c;
    idx_ = 0;
    if (++ctr_[0] == 0u && ++ctr_[1] == 0u) ++ctr_[2];
  }

  std::array<std::uint32_t, 4> ctr_{}, buf_{};
  std::array<std::uint32_t, 2> key_{};
  int idx_ = 4;
  double cached_ = 0.0;
  bool have_normal_ = false;
};

}  // namespace fwq
