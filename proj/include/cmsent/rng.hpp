#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace cmsent {

/// SplitMix64 stream. Every piece of randomness in the project flows through
/// this generator so that splits, initialization, and training are
/// reproducible across platforms (and re-implementable in other languages).
///
/// Reference sequence: state += 0x9E3779B97F4A7C15; z = state;
/// z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
/// z = (z ^ (z >> 27)) * 0x94D049BB133111EB; return z ^ (z >> 31).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 bits of precision.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [0, n). Plain modulo; the bias is ~n/2^64 and the choice is
  /// part of the documented reproducibility contract.
  std::uint64_t next_below(std::uint64_t n) { return next() % n; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

 private:
  std::uint64_t state_;
};

/// Derives an independent sub-seed for the given stream id. Documented as:
/// one SplitMix64 output step of (seed XOR (stream+1) * 0xD1B54A32D192ED03).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return SplitMix64(seed ^ ((stream + 1) * 0xD1B54A32D192ED03ULL)).next();
}

/// In-place Fisher-Yates shuffle driven by SplitMix64: for i = n-1 .. 1,
/// swap a[i] with a[rng.next() % (i+1)].
template <typename T>
void seeded_shuffle(std::vector<T>& items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace cmsent
