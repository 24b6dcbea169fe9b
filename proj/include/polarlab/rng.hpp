#pragma once

#include <cstdint>

namespace polarlab {

// SplitMix64. Used for every seeded fixture and for Monte-Carlo path
// derivation; results must not depend on platform or thread schedule, so we
// avoid <random> distributions entirely.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1).
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound) via 128-bit multiply (no modulo bias worth
  // caring about at desk scale, and bit-for-bit reproducible).
  std::uint64_t next_below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * bound) >> 64);
  }

 private:
  std::uint64_t state_;
};

// Counter-based stream derivation: stream (seed, counter) is independent of
// any other counter, so parallel consumers can draw without coordination.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t counter) {
  SplitMix64 g(seed ^ (0xd1342543de82ef95ULL * (counter + 1)));
  g.next();
  return g.next();
}

}  // namespace polarlab
