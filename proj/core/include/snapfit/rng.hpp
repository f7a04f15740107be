#pragma once

#include <cstdint>

namespace snapfit::rng {

// Counter-based noise source: every draw is a pure function of
// (seed, stream, counter). Regeneration therefore never depends on call
// order and two runs emit identical bytes.

// splitmix64 finalizer.
inline std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return mix(mix(mix(seed) ^ a) ^ b);
}

// Uniform draw in [0, 1) with 53 random bits.
inline double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  const std::uint64_t k = mix(mix(mix(seed) ^ stream) ^ counter);
  return static_cast<double>(k >> 11) * 0x1.0p-53;
}

// Zero-mean unit-variance draw via the Irwin-Hall sum of 12 uniforms.
// Pure additions only, so the result is bit-identical on any IEEE-754
// platform (no libm in the path). Tails truncate at +-6 sigma, which is
// irrelevant at the noise levels the plant uses.
inline double standard_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  double s = 0.0;
  for (std::uint64_t d = 0; d < 12; ++d) {
    s += uniform01(seed, stream, counter * 12 + d);
  }
  return s - 6.0;
}

}  // namespace snapfit::rng
