#include "qkdsim/su2.hpp"

#include <string>
#include <vector>

#include "qkdsim/errors.hpp"

namespace qkdsim {

BitString toeplitz_apply(const BitString& a, const BitString& x, std::size_t out_len) {
    if (out_len == 0) throw contract_error("toeplitz_apply: out_len must be positive");
    if (x.empty()) throw contract_error("toeplitz_apply: empty input");
    if (a.size() != out_len + x.size() - 1) {
        throw contract_error("toeplitz_apply: band length must be out_len + in_len - 1");
    }
    BitString out(out_len);
    for (std::size_t i = 0; i < out_len; ++i) {
        int acc = 0;
        for (std::size_t j = 0; j < x.size(); ++j) acc ^= a.bit(i + j) & x.bit(j);
        out.set_bit(i, acc);
    }
    return out;
}

BitString eval_su2(const Su2Key& key, const BitString& z) {
    if (key.b.empty() || key.a.size() + 1 < key.b.size()) {
        throw contract_error("eval_su2: malformed key");
    }
    if (z.size() != key.in_len()) throw contract_error("eval_su2: input length mismatch");
    return toeplitz_apply(key.a, z, key.out_len()) ^ key.b;
}

Su2Key draw_su2_key(Rng& rng, std::size_t in_len, std::size_t out_len) {
    if (in_len == 0 || out_len == 0) throw contract_error("draw_su2_key: zero dimension");
    Su2Key key;
    key.a = rng_bits(rng, out_len + in_len - 1);
    key.b = rng_bits(rng, out_len);
    return key;
}

Su2VerificationReport verify_su2_family(std::size_t r_bits, std::size_t n_bits,
                                        bool override_guard) {
    if (n_bits == 0 || r_bits <= n_bits) {
        throw contract_error("verify_su2_family: require 0 < n_bits < r_bits");
    }
    if (!override_guard && (r_bits > 6 || n_bits > 4)) {
        throw guard_error("verify_su2_family refused: r_bits > 6 or n_bits > 4 "
                          "(pass override to force)");
    }

    const std::size_t a_len = n_bits + r_bits - 1;
    const std::uint64_t num_a = 1ull << a_len;
    const std::uint64_t num_b = 1ull << n_bits;
    const std::uint64_t num_z = 1ull << r_bits;
    const std::uint64_t num_t = 1ull << n_bits;

    Su2VerificationReport report;
    report.family_size = num_a * num_b;
    report.expected_count = report.family_size >> (2 * n_bits);

    // counts[(z1 * num_z + z2) * num_t^2 + t1 * num_t + t2]
    std::vector<std::uint32_t> counts(num_z * num_z * num_t * num_t, 0);

    std::vector<std::uint64_t> images(num_z);
    for (std::uint64_t av = 0; av < num_a; ++av) {
        Su2Key key;
        key.a = BitString::from_uint(av, a_len);
        key.b = BitString(n_bits);  // tally T_a * z first; b shifts tags uniformly
        for (std::uint64_t zv = 0; zv < num_z; ++zv) {
            images[zv] = eval_su2(key, BitString::from_uint(zv, r_bits)).to_uint();
        }
        for (std::uint64_t bv = 0; bv < num_b; ++bv) {
            for (std::uint64_t z1 = 0; z1 < num_z; ++z1) {
                const std::uint64_t t1 = images[z1] ^ bv;
                for (std::uint64_t z2 = 0; z2 < num_z; ++z2) {
                    if (z1 == z2) continue;
                    const std::uint64_t t2 = images[z2] ^ bv;
                    ++counts[((z1 * num_z + z2) * num_t + t1) * num_t + t2];
                }
            }
        }
    }

    report.min_count = UINT64_MAX;
    for (std::uint64_t z1 = 0; z1 < num_z; ++z1) {
        for (std::uint64_t z2 = 0; z2 < num_z; ++z2) {
            if (z1 == z2) continue;
            for (std::uint64_t t = 0; t < num_t * num_t; ++t) {
                const std::uint64_t c = counts[(z1 * num_z + z2) * num_t * num_t + t];
                report.min_count = std::min(report.min_count, c);
                report.max_count = std::max(report.max_count, c);
                ++report.cells;
            }
        }
    }
    report.exact = (report.min_count == report.expected_count &&
                    report.max_count == report.expected_count);
    return report;
}

}  // namespace qkdsim
