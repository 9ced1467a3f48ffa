#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace mvm {

using Rng = std::mt19937_64;

/// Independent generator for a named stream of one user seed.
inline Rng derive_rng(std::uint64_t seed, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      stream};
    return Rng(seq);
}

namespace rng_stream {
inline constexpr std::uint32_t init = 1;
inline constexpr std::uint32_t shuffle = 2;
inline constexpr std::uint32_t synth = 3;
inline constexpr std::uint32_t split = 4;
inline constexpr std::uint32_t gradcheck = 5;
}  // namespace rng_stream

/// Fisher-Yates permutation of 0..n-1. Written out instead of std::shuffle
/// so the order does not depend on the standard library implementation.
inline std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(p[i - 1], p[j]);
    }
    return p;
}

}  // namespace mvm
