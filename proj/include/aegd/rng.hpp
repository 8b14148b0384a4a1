#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace aegd {

/// Counter-splittable 64-bit PRNG (SplitMix64 core).
///
/// Every source of randomness in the library flows from one explicit seed
/// through `stream()`, so independent trials draw from independent streams
/// that do not depend on execution order. All derived quantities
/// (doubles, bounded ints, shuffles) are computed with explicit bit
/// arithmetic, never through implementation-defined std distributions,
/// so results are bit-reproducible across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Log-uniform double in [lo, hi), lo > 0.
  double log_uniform(double lo, double hi);

  /// Unbiased uniform integer in [0, bound). bound must be > 0.
  std::uint64_t next_below(std::uint64_t bound) {
    // rejection sampling on the top bits
    const std::uint64_t threshold = -bound % bound;
    for (;;) {
      const std::uint64_t x = next_u64();
      if (x >= threshold) return x % bound;
    }
  }

  /// Seed of the child stream addressed by index; independent of this
  /// stream's position and of the order in which streams are requested.
  std::uint64_t stream_seed(std::uint64_t index) const {
    std::uint64_t z = seed_ ^ (0x632BE59BD9B4E019ULL * (index + 1));
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  Rng stream(std::uint64_t index) const { return Rng(stream_seed(index)); }

  /// K distinct indices drawn uniformly without replacement from [0, m).
  std::vector<int> pick_distinct(int m, int k);

  /// In-place Fisher-Yates shuffle.
  void shuffle(std::span<int> values);

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace aegd
