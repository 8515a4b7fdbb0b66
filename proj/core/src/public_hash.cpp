#include "qkdsim/public_hash.hpp"

#include <string>

#include "qkdsim/errors.hpp"

namespace qkdsim {

void SpaceParams::validate() const {
    if (n_bits == 0) throw contract_error("SpaceParams: n_bits must be positive");
    if (!(n_bits < r_bits && r_bits < m_bits)) {
        throw contract_error("SpaceParams: require n_bits < r_bits < m_bits");
    }
}

PublicHashDescriptor PublicHashDescriptor::make_xor_fold() {
    PublicHashDescriptor d;
    d.kind = PublicHashKind::xor_fold;
    return d;
}

PublicHashDescriptor PublicHashDescriptor::make_crc(const BitString& poly) {
    if (poly.size() < 2) throw contract_error("crc descriptor: polynomial needs degree >= 1");
    if (poly.bit(0) != 1 || poly.bit(poly.size() - 1) != 1) {
        throw contract_error("crc descriptor: leading and trailing coefficients must be 1");
    }
    PublicHashDescriptor d;
    d.kind = PublicHashKind::crc_poly;
    d.poly = poly;
    return d;
}

static BitString xor_fold_eval(std::size_t r_bits, const BitString& msg) {
    BitString acc(r_bits);
    for (std::size_t pos = 0; pos < msg.size(); pos += r_bits) {
        std::size_t take = std::min(r_bits, msg.size() - pos);
        for (std::size_t i = 0; i < take; ++i) {
            if (msg.bit(pos + i)) acc.flip_bit(i);
        }
    }
    return acc;
}

static BitString crc_eval(const BitString& poly, std::size_t r_bits, const BitString& msg) {
    // Plain long division: bit i of a k-bit string is the coefficient of
    // x^(k-1-i).  The remainder has degree < r.
    BitString work = msg;
    if (work.size() < r_bits) {
        BitString padded(r_bits);
        for (std::size_t i = 0; i < work.size(); ++i) {
            padded.set_bit(r_bits - work.size() + i, work.bit(i));
        }
        return padded;
    }
    for (std::size_t i = 0; i + r_bits < work.size(); ++i) {
        if (work.bit(i)) {
            for (std::size_t j = 0; j <= r_bits; ++j) {
                if (poly.bit(j)) work.flip_bit(i + j);
            }
        }
    }
    return work.slice(work.size() - r_bits, r_bits);
}

BitString eval_public_hash(const PublicHashDescriptor& f, std::size_t r_bits,
                           const BitString& msg) {
    if (r_bits == 0) throw contract_error("eval_public_hash: r_bits must be positive");
    if (msg.empty()) throw contract_error("eval_public_hash: empty message");
    switch (f.kind) {
        case PublicHashKind::xor_fold:
            return xor_fold_eval(r_bits, msg);
        case PublicHashKind::crc_poly:
            if (f.crc_degree() != r_bits) {
                throw contract_error("eval_public_hash: polynomial degree does not match r_bits");
            }
            return crc_eval(f.poly, r_bits, msg);
    }
    throw contract_error("eval_public_hash: unknown hash kind");
}

static void check_preimage_guard(std::size_t m_bits, bool override_guard) {
    if (m_bits == 0 || m_bits > 63) {
        throw contract_error("preimage scan: m_bits must be within 1..63");
    }
    if (!override_guard && m_bits > kGuardMaxMBits) {
        throw guard_error("preimage scan refused: m_bits > " + std::to_string(kGuardMaxMBits) +
                          " (pass override to force)");
    }
}

std::uint64_t count_preimages(const PublicHashDescriptor& f, std::size_t r_bits,
                              std::size_t m_bits, const BitString& z, bool override_guard) {
    check_preimage_guard(m_bits, override_guard);
    if (z.size() != r_bits) throw contract_error("count_preimages: z length must equal r_bits");
    std::uint64_t count = 0;
    const std::uint64_t total = 1ull << m_bits;
    for (std::uint64_t v = 0; v < total; ++v) {
        if (eval_public_hash(f, r_bits, BitString::from_uint(v, m_bits)) == z) ++count;
    }
    return count;
}

std::vector<BitString> enumerate_preimages(const PublicHashDescriptor& f, std::size_t r_bits,
                                           std::size_t m_bits, const BitString& z,
                                           bool override_guard) {
    check_preimage_guard(m_bits, override_guard);
    if (z.size() != r_bits) throw contract_error("enumerate_preimages: z length must equal r_bits");
    std::vector<BitString> out;
    const std::uint64_t total = 1ull << m_bits;
    for (std::uint64_t v = 0; v < total; ++v) {
        BitString msg = BitString::from_uint(v, m_bits);
        if (eval_public_hash(f, r_bits, msg) == z) out.push_back(msg);
    }
    return out;
}

std::optional<BitString> find_collision_in_ball(const PublicHashDescriptor& f,
                                                std::size_t r_bits, const BitString& center,
                                                const BitString& target_z,
                                                std::size_t max_radius) {
    if (target_z.size() != r_bits) {
        throw contract_error("find_collision_in_ball: target length must equal r_bits");
    }
    const std::size_t m = center.size();
    if (m == 0) throw contract_error("find_collision_in_ball: empty center");

    for (std::size_t radius = 0; radius <= std::min(max_radius, m); ++radius) {
        std::optional<BitString> best;
        if (radius == 0) {
            if (eval_public_hash(f, r_bits, center) == target_z) return center;
            continue;
        }
        // Walk all position subsets of size `radius`; keep the
        // lexicographically smallest matching candidate of this radius.
        std::vector<std::size_t> idx(radius);
        for (std::size_t i = 0; i < radius; ++i) idx[i] = i;
        bool more = true;
        while (more) {
            BitString candidate = center;
            for (std::size_t i : idx) candidate.flip_bit(i);
            if (eval_public_hash(f, r_bits, candidate) == target_z) {
                if (!best || candidate < *best) best = candidate;
            }
            more = false;
            for (std::size_t k = radius; k-- > 0;) {
                if (idx[k] < m - radius + k) {
                    ++idx[k];
                    for (std::size_t j = k + 1; j < radius; ++j) idx[j] = idx[j - 1] + 1;
                    more = true;
                    break;
                }
            }
        }
        if (best) return best;
    }
    return std::nullopt;
}

}  // namespace qkdsim
