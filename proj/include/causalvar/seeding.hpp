#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace causalvar {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based child seed: depends only on the master seed and the path of
/// indices, never on the order in which children are requested.
inline std::uint64_t deriveSeed(std::uint64_t master,
                                std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t s = mix64(master);
  for (std::uint64_t v : path) s = mix64(s ^ mix64(v + 0x632be59bd9b4e019ULL));
  return s;
}

inline Rng makeRng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

}  // namespace causalvar
