#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qkdsim/auth.hpp"
#include "qkdsim/bitstring.hpp"
#include "qkdsim/rng.hpp"
#include "qkdsim/wire.hpp"

namespace qkdsim {

enum class AuthMode {
    immediate,  // every classical message carries its tag
    postponed,  // messages travel bare; one terminal tag per direction
};

// Simulated key-agreement session: prepare-and-measure qubit records,
// sifting on the exchanged basis settings, block error correction, Toeplitz
// privacy amplification, and optionally a secret-keyed digest comparison of
// the reconciled keys.
//
// Classical message order and direction are fixed:
//   bob -> alice   basis record (end of quantum phase, never authenticated)
//   bob -> alice   timestamp
//   alice -> bob   settings (Alice's bases)
//   alice -> bob   ec_maps
//   bob -> alice   ec_confirm
//   alice -> bob   pa_map
//   alice -> bob   secret_hash_check (optional)
struct ProtocolConfig {
    AuthScheme scheme;
    std::size_t num_qubits = 0;
    AuthMode auth_mode = AuthMode::immediate;
    double channel_error_rate = 0.0;   // flip chance per matched-basis measurement
    double qber_abort_threshold = 0.25;  // Alice aborts above this estimate
    std::size_t ec_block_bits = 8;
    std::size_t pa_security_margin_bits = 0;  // removed on top of leaked bits
    bool secret_hash_check = false;
    // Recognized countermeasure placeholder; validate() refuses to run it.
    bool one_time_pad_reconciliation = false;
    std::uint64_t seed = 0;
    std::size_t pool_bits = std::size_t{1} << 20;

    void validate() const;
};

enum class SessionStatus {
    completed,
    aborted_auth,   // a tag or the wire format was rejected
    aborted_qber,   // error estimate too high, sift empty, or no key left
    aborted_check,  // secret-keyed digests disagreed
};

const char* session_status_name(SessionStatus status);

// Finer-grained abort cause, for diagnostics.
enum class AbortReason {
    none,
    peer_abort,  // the other side stopped first
    auth_timestamp,
    auth_settings,
    auth_ec_maps,
    auth_ec_confirm,
    auth_pa_map,
    auth_check,
    auth_terminal,  // postponed-mode round tag rejected
    bad_format,     // undecodable bytes or inconsistent field sizes
    empty_sift,
    qber_exceeded,
    pa_underflow,  // no key material left after subtracting leakage
    pa_invalid,    // received compression parameters do not fit the key
    check_mismatch,
};

const char* abort_reason_name(AbortReason reason);

// Retain own_bits exactly where the two basis strings agree, in order.
BitString sift(const BitString& own_bases, const BitString& peer_bases,
               const BitString& own_bits);

// Privacy-amplification compressor: out[i] = XOR_j band[i - j + key_len - 1]
// * key[j], a Toeplitz matrix with constant diagonals read from `band`
// (length out_len + key_len - 1).  A delta at band position key_len - 1 is
// the identity map.
BitString pa_compress(const BitString& band, const BitString& key,
                      std::size_t out_len);

// One delivered classical message, as judged by the receiver.
struct MessageRecord {
    Direction dir;
    PhaseId phase;
    bool modified = false;  // delivered bytes or tag differ from the sender's
    bool had_tag = false;
    bool accepted = false;  // tag verified (postponed mode: format accepted)
};

struct SessionOutcome {
    SessionStatus status = SessionStatus::aborted_auth;
    std::optional<BitString> alice_final_key;
    std::optional<BitString> bob_final_key;
    std::optional<BitString> eve_key_with_alice;  // adversary's tracked copies
    std::optional<BitString> eve_key_with_bob;
    std::size_t forgeries_attempted = 0;
    std::size_t forgeries_accepted = 0;
    double qber_estimate = 0.0;

    // Diagnostics beyond the headline record.
    AbortReason alice_abort = AbortReason::none;
    AbortReason bob_abort = AbortReason::none;
    std::size_t alice_sifted = 0;
    std::size_t bob_sifted = 0;
    std::size_t alice_reconciled = 0;
    std::size_t bob_reconciled = 0;
    std::uint32_t corrected_bits = 0;
    std::size_t pa_out_len = 0;
    std::size_t alice_pool_consumed = 0;
    std::size_t bob_pool_consumed = 0;
    std::vector<MessageRecord> messages;
    Transcript transcript;

    bool completed() const { return status == SessionStatus::completed; }
    bool phase_forged_accepted(PhaseId phase) const;
    bool phase_modified(PhaseId phase) const;
};

// A channel adversary sits between the honest parties.  It may replace the
// qubit stream, the unauthenticated basis record, and any classical message
// or tag in flight.  It never sees pool key material or the honest parties'
// measurement randomness.
class ChannelAdversary {
  public:
    virtual ~ChannelAdversary() = default;

    struct QuantumDelivery {
        BitString bits;             // qubit values delivered to Bob
        BitString bases;            // preparation bases of the delivered qubits
        BitString record_to_alice;  // basis record Alice receives
    };

    // Called once, after Bob's measurement bases exist but before his
    // outcomes are drawn.  Implementations must restrict themselves to
    // measurement statistics (the raw view exists so outcomes can be
    // computed at all).  Default: pass Alice's qubits through and report
    // Bob's true bases.
    virtual QuantumDelivery on_quantum(const BitString& alice_bits,
                                       const BitString& alice_bases,
                                       const BitString& bob_bases, Rng& rng);

    struct DeliveredMessage {
        std::vector<std::uint8_t> wire;
        std::optional<BitString> tag;
    };

    // Called for every classical message in flight; default pass-through.
    virtual DeliveredMessage on_message(Direction dir, PhaseId phase,
                                        const std::vector<std::uint8_t>& wire,
                                        const std::optional<BitString>& tag,
                                        Rng& rng);

    // Postponed mode only: terminal round tags in flight.
    virtual BitString on_terminal_tag(Direction dir, const BitString& tag,
                                      Rng& rng);

    // Post-session introspection used to fill SessionOutcome.
    virtual std::optional<BitString> eve_key_with_alice() const;
    virtual std::optional<BitString> eve_key_with_bob() const;
    virtual std::size_t forgeries_attempted() const;
    virtual bool attempted_phase(PhaseId phase) const;
};

// Deterministic given (config.seed, the adversary's internal seed).  Aborts
// are encoded in the outcome status, never thrown.
SessionOutcome run_session(const ProtocolConfig& config,
                           ChannelAdversary* adversary = nullptr);

}  // namespace qkdsim
