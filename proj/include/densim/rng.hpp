#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace densim {

// All stochastic components draw from a 64-bit Mersenne Twister.
using Rng = std::mt19937_64;

// splitmix64 finalizer, bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream-splitting rule: fold each index into the root seed with mix64.
// Sweeps derive per-run seeds as derive_seed(seed_root, {p_index, lambda_index, run_index}),
// so every run owns an independent stream regardless of execution order.
constexpr std::uint64_t derive_seed(std::uint64_t root,
                                    std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = mix64(root);
  for (std::uint64_t v : path) h = mix64(h ^ v);
  return h;
}

}  // namespace densim
