#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace cacmtune {

// Seed derivation for reproducible nested experiments.
//
// derive_seed is fixed bit-exactly so that run seeds can be reproduced by
// any implementation, independent of this library:
//
//   z = master + 0x9E3779B97F4A7C15 * (index + 1)   (mod 2^64)
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9        (mod 2^64)
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB        (mod 2^64)
//   return z ^ (z >> 31)
//
// This is the splitmix64 output function applied to the master seed advanced
// by (index + 1) increments.
inline constexpr std::uint64_t kSeedIncrement = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(master + kSeedIncrement * (index + 1));
}

// Deterministic random source. All distributions are implemented on top of
// the raw mt19937_64 stream (whose output is specified by the standard), so
// sequences are identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  // uniform double in [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  std::size_t index(std::size_t n) {
    std::size_t i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  // standard normal via Box-Muller; second value of each pair is cached
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 gen_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace cacmtune
