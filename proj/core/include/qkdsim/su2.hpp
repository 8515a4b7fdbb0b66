#pragma once

#include <cstdint>

#include "qkdsim/bitstring.hpp"
#include "qkdsim/public_hash.hpp"
#include "qkdsim/rng.hpp"

namespace qkdsim {

// Key for the affine Toeplitz hash z -> T_a * z XOR b mapping in_len bits to
// out_len bits.  `a` has out_len + in_len - 1 bits, `b` has out_len bits.
//
// Bit layout of the matrix: row i of T_a reads a[i .. i+in_len-1], so the
// first column top-to-bottom is a[0 .. out_len-1] and the remaining first-row
// elements continue through a[out_len-1 .. out_len+in_len-2], the corner
// element a[out_len-1] being shared.  Every diagonal band of the matrix is
// constant, and the family {(a, b)} of size 2^(2*out_len + in_len - 1) is
// strongly universal-2: for z1 != z2 and any tag pair (t1, t2), exactly
// |family| / 2^(2*out_len) keys send z1 -> t1 and z2 -> t2.
struct Su2Key {
    BitString a;
    BitString b;

    std::size_t in_len() const { return a.size() + 1 - b.size(); }
    std::size_t out_len() const { return b.size(); }
};

// T_a * x where row i of the band matrix reads a[i .. i+x.size()-1].
// Requires a.size() == out_len + x.size() - 1.
BitString toeplitz_apply(const BitString& a, const BitString& x, std::size_t out_len);

// T_a * z XOR b.  z.size() must equal key.in_len().
BitString eval_su2(const Su2Key& key, const BitString& z);

// Draws (a, b) sized for an in_len -> out_len hash from an engine.
Su2Key draw_su2_key(Rng& rng, std::size_t in_len, std::size_t out_len);

struct Su2VerificationReport {
    std::uint64_t family_size = 0;     // 2^(2n + r - 1)
    std::uint64_t expected_count = 0;  // family_size / 2^(2n)
    std::uint64_t min_count = 0;
    std::uint64_t max_count = 0;
    std::uint64_t cells = 0;  // populated (z1, z2, t1, t2) cells
    bool exact = false;       // every cell hit expected_count exactly
};

// Exhaustively tallies, over all keys and all ordered pairs z1 != z2, how many
// keys produce each (t1, t2) pair.  Strong universality-2 holds iff every cell
// count equals family_size / 2^(2n).  Guarded to r_bits <= 6 and n_bits <= 4
// unless overridden (cost grows as 2^(2n + r - 1) * 4^r).
Su2VerificationReport verify_su2_family(std::size_t r_bits, std::size_t n_bits,
                                        bool override_guard = false);

}  // namespace qkdsim
