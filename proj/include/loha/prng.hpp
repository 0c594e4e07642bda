#pragma once

#include <cstdint>

namespace loha {

// SplitMix64 (Steele, Lea & Flood). The state advances by the golden-ratio
// increment and each output is a finalizer mix of the new state:
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
//
// The recurrence is fixed so that seeded runs reproduce bit-for-bit on any
// platform, unlike std::mt19937 whose distributions are unspecified.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1), using the top 53 bits.
  constexpr double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n) via 128-bit multiply-shift. n must be nonzero.
  constexpr std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * static_cast<unsigned __int128>(n)) >> 64);
  }

  // Uniform integer in [lo, hi], inclusive.
  constexpr std::int64_t next_in(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

 private:
  std::uint64_t state_;
};

// Applies the SplitMix64 finalizer to a single value. Used to derive
// independent seeds and as a cheap high-quality hash mix.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Derives a child seed from a parent seed and a stream index, so that
// map generation, scenario sampling, model init etc. get decorrelated
// streams from one user-facing seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed + 0x9E3779B97F4A7C15ULL * (stream + 1));
}

}  // namespace loha
