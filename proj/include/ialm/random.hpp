#pragma once

// Counter-based SplitMix64. A draw is a pure function of (seed, stream,
// index), so every matrix of an instance has its own reproducible stream
// independent of generation order.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ialm {

/// Fixed stream ids used by the generators.
enum class RandomStream : std::uint64_t {
  q = 1,
  a = 2,
  c = 3,
  x_hat = 4,
  b = 5,
  x0 = 6,
  points = 7,
};

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class CounterRng {
 public:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  CounterRng(std::uint64_t seed, RandomStream stream)
      : key_(splitmix64_mix(seed ^ splitmix64_mix(static_cast<std::uint64_t>(stream) * kGolden))) {}

  /// The i-th raw 64-bit draw of this stream.
  std::uint64_t at(std::uint64_t i) const { return splitmix64_mix(key_ + (i + 1) * kGolden); }

  std::uint64_t next_u64() { return at(counter_++); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; consumes two draws per sample.
  double normal() {
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t position() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ialm
