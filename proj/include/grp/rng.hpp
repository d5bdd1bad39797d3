#pragma once

#include <cstdint>
#include <random>

namespace grp {

using Rng = std::mt19937_64;

/// Mix an integer with the splitmix64 finalizer. The finalizer is a bijection
/// on 64-bit integers.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Per-run seed derived from a master seed. For a fixed master seed the map
/// run_id -> seed is injective: the golden-ratio multiplier is odd, so the
/// affine step is a bijection, and splitmix64 is a bijection.
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t run_id) {
  return splitmix64(master_seed + 0x9e3779b97f4a7c15ULL * (run_id + 1));
}

/// Stream tags; each run owns one generator per tag.
enum class Stream : std::uint64_t { Events = 1, Components = 2, Perturbations = 3, Init = 4 };

inline Rng make_stream(std::uint64_t run_seed, Stream stream) {
  return Rng(derive_seed(run_seed, 0x5354524541400000ULL + static_cast<std::uint64_t>(stream)));
}

}  // namespace grp
