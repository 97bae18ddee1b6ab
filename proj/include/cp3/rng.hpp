#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace cp3 {

// SplitMix64 (Steele, Lea, Flood 2014). Chosen over std::mt19937 because the
// standard distributions are not bit-reproducible across library
// implementations, and reproducibility across runs and thread counts is a
// hard requirement here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Modulo bias is ~n/2^64, irrelevant next to the
  // determinism we get in exchange.
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  // Standard normal via Box-Muller; caches the second deviate.
  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = next_double();
    double u2 = next_double();
    // Avoid log(0).
    while (u1 <= 0.0) u1 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Derives an independent stream seed from a root seed and a salt. One
// SplitMix64 output step is enough to decorrelate neighbouring salts.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t salt) {
  Rng mix(root ^ (salt * 0x9e3779b97f4a7c15ULL));
  return mix.next_u64();
}

// Stream seed for per-pixel work: identical regardless of scheduling.
inline std::uint64_t pixel_seed(std::uint64_t root, int u, int v) {
  return derive_seed(root, (static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)) << 32) |
                               static_cast<std::uint32_t>(u));
}

}  // namespace cp3
