#include "qkdsim/ec.hpp"

#include <algorithm>

#include "qkdsim/errors.hpp"

namespace qkdsim {

std::size_t ec_num_blocks(std::size_t key_len, std::size_t block_bits) {
    if (block_bits == 0) throw contract_error("ec: block_bits must be positive");
    return (key_len + block_bits - 1) / block_bits;
}

std::size_t ec_block_width(std::size_t key_len, std::size_t block_bits,
                           std::size_t index) {
    std::size_t nb = ec_num_blocks(key_len, block_bits);
    if (index >= nb) throw contract_error("ec: block index out of range");
    if (index + 1 < nb) return block_bits;
    return key_len - block_bits * (nb - 1);
}

EcBlockMatrix ec_block_matrix(std::uint32_t matrix_seed,
                              std::size_t block_index, std::size_t width,
                              std::size_t rows) {
    if (rows == 0 || rows > 16) throw contract_error("ec: rows out of range");
    std::uint32_t pool = (1u << rows) - 1;  // nonzero column values
    // Narrow blocks (width > pool) cannot have all-distinct columns; they
    // fall back to repeated nonzero columns and lose single-flip uniqueness.
    const bool distinct = width <= pool;
    Rng rng(0x9e3779b97f4a7c15ULL * (block_index + 1) ^ matrix_seed);
    EcBlockMatrix mat;
    mat.rows = rows;
    mat.columns.reserve(width);
    while (mat.columns.size() < width) {
        std::uint32_t candidate =
            static_cast<std::uint32_t>(rng_below(rng, pool)) + 1;
        if (!distinct ||
            std::find(mat.columns.begin(), mat.columns.end(), candidate) ==
                mat.columns.end())
            mat.columns.push_back(candidate);
    }
    return mat;
}

std::uint32_t ec_block_syndrome(const EcBlockMatrix& mat,
                                const BitString& block) {
    if (block.size() != mat.columns.size())
        throw contract_error("ec: block width does not match matrix");
    std::uint32_t syn = 0;
    for (std::size_t j = 0; j < block.size(); ++j)
        if (block.bit(j)) syn ^= mat.columns[j];
    return syn;
}

BitString ec_permute(const BitString& key, std::uint32_t perm_seed) {
    Rng rng(perm_seed);
    std::vector<std::size_t> perm = rng_permutation(rng, key.size());
    BitString out(key.size());
    for (std::size_t i = 0; i < key.size(); ++i)
        out.set_bit(i, key.bit(perm[i]));
    return out;
}

BitString ec_syndromes(const BitString& permuted_key,
                       std::uint32_t matrix_seed, std::size_t block_bits) {
    std::size_t nb = ec_num_blocks(permuted_key.size(), block_bits);
    std::size_t rows = ec_syndrome_rows(block_bits);
    BitString out;
    for (std::size_t idx = 0; idx < nb; ++idx) {
        std::size_t width =
            ec_block_width(permuted_key.size(), block_bits, idx);
        BitString block = permuted_key.slice(idx * block_bits, width);
        EcBlockMatrix mat = ec_block_matrix(matrix_seed, idx, width, rows);
        out.append(BitString::from_uint(ec_block_syndrome(mat, block), rows));
    }
    return out;
}

EcDecodeResult ec_decode_block(const EcBlockMatrix& mat,
                               const BitString& block,
                               std::uint32_t target_syndrome) {
    std::uint32_t diff = ec_block_syndrome(mat, block) ^ target_syndrome;
    EcDecodeResult result;
    if (diff == 0) {
        result.status = BlockStatus::matched;
        return result;
    }
    for (std::size_t j = 0; j < mat.columns.size(); ++j) {
        if (mat.columns[j] == diff) {
            result.status = BlockStatus::corrected;
            result.flips = {j};
            return result;
        }
    }
    for (std::size_t i = 0; i < mat.columns.size(); ++i) {
        for (std::size_t j = i + 1; j < mat.columns.size(); ++j) {
            if ((mat.columns[i] ^ mat.columns[j]) == diff) {
                result.status = BlockStatus::corrected;
                result.flips = {i, j};
                return result;
            }
        }
    }
    result.status = BlockStatus::failed;
    return result;
}

EcReceiverOutcome ec_receiver(const BitString& sifted, std::uint32_t perm_seed,
                              std::uint32_t matrix_seed,
                              std::size_t block_bits,
                              const BitString& syndromes) {
    EcReceiverOutcome out;
    std::size_t nb = ec_num_blocks(sifted.size(), block_bits);
    std::size_t rows = ec_syndrome_rows(block_bits);
    if (syndromes.size() != nb * rows) return out;  // ok stays false
    out.ok = true;
    BitString permuted = ec_permute(sifted, perm_seed);
    for (std::size_t idx = 0; idx < nb; ++idx) {
        std::size_t width = ec_block_width(sifted.size(), block_bits, idx);
        BitString block = permuted.slice(idx * block_bits, width);
        EcBlockMatrix mat = ec_block_matrix(matrix_seed, idx, width, rows);
        std::uint32_t target =
            static_cast<std::uint32_t>(syndromes.slice(idx * rows, rows)
                                           .to_uint());
        EcDecodeResult dec = ec_decode_block(mat, block, target);
        out.statuses.push_back(dec.status);
        if (dec.status == BlockStatus::failed) continue;
        for (std::size_t pos : dec.flips) block.flip_bit(pos);
        out.corrected_bits += static_cast<std::uint32_t>(dec.flips.size());
        out.reconciled.append(block);
    }
    return out;
}

BitString ec_apply_statuses(const BitString& permuted_key,
                            std::size_t block_bits,
                            const std::vector<BlockStatus>& statuses) {
    std::size_t nb = ec_num_blocks(permuted_key.size(), block_bits);
    if (statuses.size() != nb)
        throw contract_error("ec: status count does not match block count");
    BitString out;
    for (std::size_t idx = 0; idx < nb; ++idx) {
        if (statuses[idx] == BlockStatus::failed) continue;
        std::size_t width =
            ec_block_width(permuted_key.size(), block_bits, idx);
        out.append(permuted_key.slice(idx * block_bits, width));
    }
    return out;
}

BitString ec_statuses_to_bits(const std::vector<BlockStatus>& statuses) {
    BitString out(statuses.size() * 2);
    for (std::size_t i = 0; i < statuses.size(); ++i) {
        std::uint8_t v = static_cast<std::uint8_t>(statuses[i]);
        out.set_bit(2 * i, (v >> 1) & 1);
        out.set_bit(2 * i + 1, v & 1);
    }
    return out;
}

std::vector<BlockStatus> ec_statuses_from_bits(const BitString& bits,
                                               bool* valid) {
    std::vector<BlockStatus> out;
    if (bits.size() % 2 != 0) {
        if (valid) *valid = false;
        return out;
    }
    for (std::size_t i = 0; i < bits.size() / 2; ++i) {
        std::uint8_t v = static_cast<std::uint8_t>(
            (bits.bit(2 * i) ? 2 : 0) | (bits.bit(2 * i + 1) ? 1 : 0));
        if (v > 2) {
            if (valid) *valid = false;
            return {};
        }
        out.push_back(static_cast<BlockStatus>(v));
    }
    if (valid) *valid = true;
    return out;
}

}  // namespace qkdsim
