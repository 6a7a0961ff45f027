#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace supgcl {

using Rng = std::mt19937_64;

/// Seed for an independent stream `stream` derived from `seed` (splitmix64 mix),
/// so per-run generators stay fixed no matter how work is scheduled.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

} // namespace supgcl
