#pragma once

#include <cstdint>
#include <vector>

#include "qkdsim/bitstring.hpp"
#include "qkdsim/rng.hpp"

namespace qkdsim {

// Block error correction used during reconciliation.
//
// The sifted key is shuffled with a seeded permutation, cut into blocks of
// `block_bits` (the final block may be shorter), and each block is described
// by a parity-check matrix with ceil(block_bits / 2) rows whose columns are
// nonzero and, when the width permits, distinct.  Distinct nonzero columns
// make every single-bit discrepancy decode uniquely; the decoder also
// attempts two-bit patterns (smallest weight first, lexicographic
// tie-break) and reports failure when nothing within weight two matches.

enum class BlockStatus : std::uint8_t {
    matched = 0,    // syndromes agreed, block untouched
    corrected = 1,  // a pattern of weight <= 2 was applied
    failed = 2,     // no pattern of weight <= 2 matched; block is dropped
};

inline std::size_t ec_syndrome_rows(std::size_t block_bits) {
    return (block_bits + 1) / 2;
}

// Number of blocks a key of `key_len` bits splits into (ceiling division).
std::size_t ec_num_blocks(std::size_t key_len, std::size_t block_bits);

// Width of block `index`; only the last block may be narrower than block_bits.
std::size_t ec_block_width(std::size_t key_len, std::size_t block_bits,
                           std::size_t index);

struct EcBlockMatrix {
    std::size_t rows = 0;
    // columns[j] holds the parity column for bit j, packed into the low
    // `rows` bits (BitString::from_uint order).
    std::vector<std::uint32_t> columns;
};

// Deterministic matrix for one block.  Columns are distinct whenever
// width <= 2^rows - 1; wider blocks fall back to repeated nonzero columns.
EcBlockMatrix ec_block_matrix(std::uint32_t matrix_seed,
                              std::size_t block_index, std::size_t width,
                              std::size_t rows);

// Syndrome of `block` (length == columns.size()) packed into a uint.
std::uint32_t ec_block_syndrome(const EcBlockMatrix& mat,
                                const BitString& block);

// Apply the permutation derived from perm_seed: output bit i is input bit
// perm[i].
BitString ec_permute(const BitString& key, std::uint32_t perm_seed);

// Concatenated per-block syndromes of an already-permuted key.
BitString ec_syndromes(const BitString& permuted_key,
                       std::uint32_t matrix_seed, std::size_t block_bits);

struct EcDecodeResult {
    BlockStatus status = BlockStatus::failed;
    std::vector<std::size_t> flips;  // positions within the block
};

// Decode one block against a target syndrome value.
EcDecodeResult ec_decode_block(const EcBlockMatrix& mat,
                               const BitString& block,
                               std::uint32_t target_syndrome);

struct EcReceiverOutcome {
    bool ok = false;  // false when the syndrome stream has the wrong length
    std::vector<BlockStatus> statuses;
    std::uint32_t corrected_bits = 0;
    BitString reconciled;  // surviving blocks, in permuted order
};

// Full receiver pass: permute, decode every block against the peer's
// syndromes, apply corrections, drop failed blocks.
EcReceiverOutcome ec_receiver(const BitString& sifted, std::uint32_t perm_seed,
                              std::uint32_t matrix_seed,
                              std::size_t block_bits,
                              const BitString& syndromes);

// Sender-side drop pass: remove the blocks the peer reported as failed.
// Requires statuses.size() == ec_num_blocks(permuted_key.size(), block_bits).
BitString ec_apply_statuses(const BitString& permuted_key,
                            std::size_t block_bits,
                            const std::vector<BlockStatus>& statuses);

// Two-bit-per-block wire form used by the confirmation message.
BitString ec_statuses_to_bits(const std::vector<BlockStatus>& statuses);
// Returns an empty vector when a 2-bit field holds the reserved value 3 or
// the stream length is odd.
std::vector<BlockStatus> ec_statuses_from_bits(const BitString& bits,
                                               bool* valid);

}  // namespace qkdsim
