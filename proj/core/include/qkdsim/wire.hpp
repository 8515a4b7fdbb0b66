#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qkdsim/bitstring.hpp"

namespace qkdsim {

// Classical post-processing phases, in protocol order.  The numeric values
// are the on-wire phase ids.
enum class PhaseId : std::uint8_t {
    timestamp_end_quantum = 0,
    settings = 1,
    ec_maps = 2,
    ec_confirm = 3,
    pa_map = 4,
    secret_hash_check = 5,
};

const char* phase_name(PhaseId phase);

enum class Direction { alice_to_bob, bob_to_alice };
const char* direction_name(Direction dir);

// Closes the quantum transmission phase.
struct TimestampMsg {
    std::uint32_t round_id = 0;
};

// Sender's basis choices, one bit per transmitted qubit.
struct SettingsMsg {
    BitString bases;
};

// Reconciliation recipe: seeds expand deterministically into a permutation of
// the receiver's key and one parity-check matrix per block; syndromes are the
// sender's per-block parity values, concatenated.
struct EcMapsMsg {
    std::uint32_t perm_seed = 0;
    std::uint32_t matrix_seed = 0;
    BitString syndromes;
};

// Per-block outcome flags (2 bits per block: 0 matched, 1 corrected,
// 2 failed) plus the total number of corrected bits.
struct EcConfirmMsg {
    BitString block_status;
    std::uint32_t corrected_bits = 0;
};

// Compression recipe for the final key: output length plus the band seed of
// the binary Toeplitz compressor.  The seed field always carries
// 2 * num_qubits bits; receivers use the leading out_len + key_len - 1 bits.
struct PaMapMsg {
    std::uint32_t out_len = 0;
    BitString seed;
};

// Secret-keyed digest of the sender's reconciled key.
struct CheckMsg {
    BitString value;
};

using PhaseBody =
    std::variant<TimestampMsg, SettingsMsg, EcMapsMsg, EcConfirmMsg, PaMapMsg, CheckMsg>;

struct PhaseMessage {
    PhaseBody body;

    PhaseId phase() const;
};

// Canonical encoding: byte 0 is the phase id, then the body fields in
// declaration order; integers as 32-bit big-endian, bit strings as a 32-bit
// big-endian bit count followed by MSB-first zero-padded bytes.  decode is a
// strict inverse and rejects trailing bytes, unknown ids, and padding noise.
std::vector<std::uint8_t> encode(const PhaseMessage& msg);
PhaseMessage decode(const std::vector<std::uint8_t>& wire);

// One classical message as it crossed the channel.
struct TranscriptEntry {
    Direction dir;
    PhaseId phase;
    std::vector<std::uint8_t> wire;
    std::optional<BitString> tag;  // absent while tags are postponed
};

struct Transcript {
    std::vector<TranscriptEntry> entries;
    // Terminal round tags (postponed mode only).
    std::optional<BitString> terminal_tag_alice_to_bob;
    std::optional<BitString> terminal_tag_bob_to_alice;

    // One line per message: direction, phase, payload hex, tag hex or "-".
    std::vector<std::string> export_lines() const;
};

std::string bytes_to_hex(const std::vector<std::uint8_t>& bytes);

}  // namespace qkdsim
