#pragma once

#include <cstdint>
#include <random>

namespace pattc {

// splitmix64 finalizer; decorrelates derived seeds from sequential indices.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Every parallel task (grid cell, bootstrap replicate, CV fold) gets its own
// stream seeded by derive_seed(base, index), so serial and parallel execution
// consume identical random sequences.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return mix64(base ^ mix64(index + 0x51ed2701a3c5e871ull));
}

using Rng = std::mt19937_64;

}  // namespace pattc
