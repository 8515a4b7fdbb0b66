#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qkdsim/bitstring.hpp"

namespace qkdsim {

// Dimensions of the tagging pipeline: message m, compressed digest r, tag n,
// with n < r < m.
struct SpaceParams {
    std::size_t m_bits = 0;
    std::size_t r_bits = 0;
    std::size_t n_bits = 0;

    void validate() const;
};

// Exhaustive helpers refuse to run above these sizes unless the caller passes
// override_guard = true.
inline constexpr std::size_t kGuardMaxRBits = 12;
inline constexpr std::size_t kGuardMaxNBits = 6;
inline constexpr std::size_t kGuardMaxMBits = 20;

enum class PublicHashKind { xor_fold, crc_poly };

// Publicly known linear compression f mapping an input block to r bits.
//   xor_fold:  XOR of the ceil(len/r) r-bit blocks of the input, the last
//              block zero-padded at its tail.
//   crc_poly:  input read as a GF(2) polynomial (bit 0 = highest degree),
//              reduced modulo `poly`.  `poly` has r+1 bits with leading and
//              trailing coefficient 1, bit 0 being the x^r coefficient.
struct PublicHashDescriptor {
    PublicHashKind kind = PublicHashKind::xor_fold;
    BitString poly;  // crc_poly only

    static PublicHashDescriptor make_xor_fold();
    static PublicHashDescriptor make_crc(const BitString& poly);
    // Degree of the reduction polynomial; must equal r_bits when used.
    std::size_t crc_degree() const { return poly.size() == 0 ? 0 : poly.size() - 1; }
};

// r-bit digest of msg; msg may be any nonempty length (protocol callers pass
// m_bits-long chunks).
BitString eval_public_hash(const PublicHashDescriptor& f, std::size_t r_bits,
                           const BitString& msg);

// Number of m_bits-long messages with digest z.  Exhaustive scan; guarded by
// m_bits <= 20 unless overridden.
std::uint64_t count_preimages(const PublicHashDescriptor& f, std::size_t r_bits,
                              std::size_t m_bits, const BitString& z,
                              bool override_guard = false);

// All m_bits-long messages with digest z, in lexicographic order.  Same guard
// as count_preimages.
std::vector<BitString> enumerate_preimages(const PublicHashDescriptor& f, std::size_t r_bits,
                                           std::size_t m_bits, const BitString& z,
                                           bool override_guard = false);

// Lexicographically-first message within Hamming distance <= max_radius of
// `center` whose digest equals target_z, searching radius 0, then 1, ...
// Within one radius ties break lexicographically.  Empty optional when the
// ball is exhausted.
std::optional<BitString> find_collision_in_ball(const PublicHashDescriptor& f,
                                                std::size_t r_bits, const BitString& center,
                                                const BitString& target_z,
                                                std::size_t max_radius);

}  // namespace qkdsim
