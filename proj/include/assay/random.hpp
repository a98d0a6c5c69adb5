#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace assay {

// Every random decision in the library draws from an explicit Rng; nothing
// is seeded from the clock.
using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// A stream for a logical seed. Run r of an experiment with base seed s uses
// make_rng(s + r).
inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

// Independent child stream; advances the parent by one draw.
inline Rng substream(Rng& parent) { return Rng(splitmix64(parent())); }

// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Uniform on (0, 1).
inline double uniform_open01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

// Uniform index in [0, n). n must be positive.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

// Degenerate probabilities (p <= 0 or p >= 1) consume no draw, so a strategy
// parameterized at a boundary replays the exact stream of its reduced form.
inline bool bernoulli(Rng& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform01(rng) < p;
}

// log of a Gamma(shape, 1) draw. Works in log space so that tiny shapes
// do not underflow to zero.
inline double log_gamma_draw(Rng& rng, double shape) {
  if (shape >= 1.0) {
    std::gamma_distribution<double> g(shape, 1.0);
    return std::log(g(rng));
  }
  std::gamma_distribution<double> g(shape + 1.0, 1.0);
  const double boosted = std::log(g(rng));
  return boosted + std::log(uniform_open01(rng)) / shape;
}

}  // namespace assay
