#pragma once

// Counter-based RNG (Philox 4x32-10) with stream splitting, plus the handful
// of samplers the toolkit needs. Every chain/walker derives its stream from
// (master seed, purpose tag, index), so results do not depend on how work is
// distributed over threads.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace torusgff {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a 64
  for (unsigned char ch : tag) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

class Rng {
 public:
  Rng() : Rng(0, "default", 0) {}

  Rng(std::uint64_t master_seed, std::string_view tag, std::uint64_t index) {
    std::uint64_t s = master_seed;
    std::uint64_t a = splitmix64(s);
    s ^= hash_tag(tag);
    std::uint64_t b = splitmix64(s);
    s ^= 0x9E3779B97F4A7C15ull * (index + 1);
    std::uint64_t c = splitmix64(s);
    key_[0] = static_cast<std::uint32_t>(a ^ (c >> 32));
    key_[1] = static_cast<std::uint32_t>((a >> 32) ^ b);
    counter_ = b ^ c;
  }

  std::uint64_t next_u64() {
    if (buf_pos_ >= 2) refill();
    return buf_[buf_pos_++];
  }

  // 53-bit uniform in [0, 1)
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in (0, 1]; safe under log()
  double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  std::int64_t uniform_below(std::int64_t n) {
    // rejection to avoid modulo bias
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t x;
    do { x = next_u64(); } while (x >= limit);
    return static_cast<std::int64_t>(x % un);
  }

  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u = uniform_pos();
    const double v = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double a = 2.0 * std::numbers::pi * v;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  // Marsaglia-Tsang; alpha > 0
  double gamma(double alpha) {
    if (alpha < 1.0) {
      const double u = uniform_pos();
      return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

  // von Mises with location 0 and concentration kappa >= 0 (Best-Fisher).
  double von_mises(double kappa) {
    if (kappa < 1e-10) return (2.0 * uniform01() - 1.0) * std::numbers::pi;
    const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
    const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
    const double r = (1.0 + rho * rho) / (2.0 * rho);
    for (;;) {
      const double z = std::cos(std::numbers::pi * uniform01());
      const double f = std::clamp((1.0 + r * z) / (r + z), -1.0, 1.0);
      const double c = kappa * (r - f);
      const double u = uniform_pos();
      if (c * (2.0 - c) - u > 0.0 || std::log(c / u) + 1.0 - c >= 0.0) {
        const double sign = (uniform01() < 0.5) ? -1.0 : 1.0;
        return sign * std::acos(f);
      }
    }
  }

 private:
  static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
  }

  void refill() {  // Philox 4x32, 10 rounds
    std::uint32_t x0 = static_cast<std::uint32_t>(counter_);
    std::uint32_t x1 = static_cast<std::uint32_t>(counter_ >> 32);
    std::uint32_t x2 = 0x243F6A88u, x3 = 0x85A308D3u;
    std::uint32_t k0 = key_[0], k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      std::uint32_t hi0, lo0, hi1, lo1;
      mulhilo(0xD2511F53u, x0, hi0, lo0);
      mulhilo(0xCD9E8D57u, x2, hi1, lo1);
      x0 = hi1 ^ x1 ^ k0;
      x1 = lo1;
      x2 = hi0 ^ x3 ^ k1;
      x3 = lo0;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    buf_[0] = (static_cast<std::uint64_t>(x1) << 32) | x0;
    buf_[1] = (static_cast<std::uint64_t>(x3) << 32) | x2;
    ++counter_;
    buf_pos_ = 0;
  }

  std::uint32_t key_[2];
  std::uint64_t counter_ = 0;
  std::uint64_t buf_[2] = {0, 0};
  int buf_pos_ = 2;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace torusgff
