#pragma once

// Seeded random streams with bit-exact output across standard libraries.
//
// std::uniform_real_distribution and std::normal_distribution are
// implementation-defined, so values frozen into regression tests would drift
// between libstdc++ and libc++. The engine (mt19937_64) is fully specified;
// the conversions below are ours.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

namespace cashadmm {

using rng_t = std::mt19937_64;

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives a child seed from a parent seed and a stream tag.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) {
  return mix64(mix64(parent) ^ (tag * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}

template <class... Tags>
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag, Tags... rest) {
  return derive_seed(derive_seed(parent, tag), static_cast<std::uint64_t>(rest)...);
}

/// Uniform on [0, 1) with 53 bits of resolution.
inline double uniform01(rng_t& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(rng_t& rng, double lower, double upper) {
  return lower + (upper - lower) * uniform01(rng);
}

/// Uniform integer on the closed range [lower, upper], rejection sampled.
inline std::int64_t uniform_int(rng_t& rng, std::int64_t lower, std::int64_t upper) {
  const auto span = static_cast<std::uint64_t>(upper - lower) + 1;
  if (span == 0) return static_cast<std::int64_t>(rng());  // full 64-bit range
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t r = rng();
  while (r >= limit) r = rng();
  return lower + static_cast<std::int64_t>(r % span);
}

/// Standard normal via Box-Muller; consumes two engine outputs per draw.
inline double standard_normal(rng_t& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace cashadmm
