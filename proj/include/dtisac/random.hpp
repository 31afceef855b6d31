#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "dtisac/numerics.hpp"

namespace dtisac {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t z)
{
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed of stream `index` under `master`: the index-th output of a SplitMix64
/// sequence started at the master seed. Independent of how many streams exist.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index)
{
    return splitmix64(master + 0x9E3779B97F4A7C15ULL * index);
}

/// Circularly-symmetric complex Gaussian sample with the given variance.
inline Complex complex_normal(Rng& rng, double variance)
{
    std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
    const double re = n(rng);
    const double im = n(rng);
    return {re, im};
}

/// Phase drawn from U[0, 2 pi).
inline double uniform_phase(Rng& rng)
{
    return std::uniform_real_distribution<double>(0.0, 2.0 * kPi)(rng);
}

inline double uniform(Rng& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace dtisac
