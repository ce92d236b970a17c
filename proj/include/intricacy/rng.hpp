#pragma once

#include <cstdint>
#include <random>

namespace intricacy {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of the i-th independent stream under a root seed.
///
/// Counter based: the value depends only on (root, index), so an ensemble
/// gives the same per-trial streams whether it runs serially or in parallel.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index)
{
    return splitmix64(root + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

inline Rng make_rng(std::uint64_t root, std::uint64_t index)
{
    return Rng(derive_seed(root, index));
}

} // namespace intricacy
