#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "qkdsim/bitstring.hpp"
#include "qkdsim/errors.hpp"

namespace qkdsim {

// All randomness in the library flows through a seeded mt19937_64 and the
// helpers below.  std::uniform_int_distribution and friends are
// implementation-defined, so we draw raw engine words and reduce them
// ourselves to keep outputs identical across standard libraries.
using Rng = std::mt19937_64;

inline int rng_bit(Rng& rng) { return static_cast<int>(rng() & 1u); }

// Uniform value in [0, bound) by rejection; bound > 0.
inline std::uint64_t rng_below(Rng& rng, std::uint64_t bound) {
    if (bound == 0) throw contract_error("rng_below: bound must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    for (;;) {
        std::uint64_t v = rng();
        if (v < limit) return v % bound;
    }
}

// Bernoulli(p) using the top 53 bits of one engine word.
inline bool rng_coin(Rng& rng, double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    const double u = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
    return u < p;
}

inline BitString rng_bits(Rng& rng, std::size_t len) {
    BitString out(len);
    for (std::size_t i = 0; i < len; ++i) out.set_bit(i, rng_bit(rng));
    return out;
}

// Derive an independent stream seed from a base seed (splitmix64 finalizer).
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Fisher-Yates permutation of [0, n).
inline std::vector<std::size_t> rng_permutation(Rng& rng, std::size_t n) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng_below(rng, i));
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

}  // namespace qkdsim
