#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace wrinkle {

/// SplitMix64. Used for seeding and for hashing seeds together.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// One-shot SplitMix64 finalizer of a single value.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  return SplitMix64(x).next();
}

constexpr std::uint64_t rotl64(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

/// xoshiro256** (Blackman & Vigna). All samplers below are written out
/// explicitly instead of using <random> distributions, whose outputs are
/// implementation-defined; draws are therefore identical on every platform.
///
/// Seeding: the four state words are the first four outputs of SplitMix64
/// started at `seed ^ mix64(stream + 1)`. Distinct stream indices give
/// independent sequences for the same seed.
class Xoshiro256 {
 public:
  explicit constexpr Xoshiro256(std::uint64_t seed,
                                std::uint64_t stream = 0) noexcept {
    SplitMix64 sm(seed ^ mix64(stream + 1));
    for (auto& word : s_) word = sm.next();
  }

  constexpr std::uint64_t next() noexcept {
    const std::uint64_t result = rotl64(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl64(s_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  /// Uniform integer in the closed range [lo, hi], unbiased by rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next());  // full range
    const std::uint64_t threshold = (0 - span) % span;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return lo + static_cast<std::int64_t>(r % span);
    }
  }

  /// Standard normal via Box-Muller (no cached second variate).
  double normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

 private:
  std::uint64_t s_[4]{};
};

}  // namespace wrinkle
