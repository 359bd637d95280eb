// Seeded random streams with results that do not depend on the standard
// library implementation (std::uniform_*_distribution and std::shuffle are
// implementation-defined, so they are avoided).
#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <utility>
#include <vector>

namespace stagerl {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for the stream identified by `seed` and a path of indices, e.g.
/// (seed, step, prompt, sample).
inline std::uint64_t stream_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t k : path) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

using Engine = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits.
inline double u01(Engine& e) { return static_cast<double>(e() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n) by rejection; n > 0.
inline std::uint64_t uniform_index(Engine& e, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  for (;;) {
    std::uint64_t v = e();
    if (v < limit) return v % n;
  }
}

/// Standard normal via Box-Muller.
inline double normal01(Engine& e) {
  double u1 = 1.0 - u01(e);  // (0, 1]
  double u2 = u01(e);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

template <typename T>
void shuffle_in_place(std::vector<T>& v, Engine& e) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(uniform_index(e, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace stagerl
