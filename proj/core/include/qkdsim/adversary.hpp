#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qkdsim/auth.hpp"
#include "qkdsim/bitstring.hpp"
#include "qkdsim/ec.hpp"
#include "qkdsim/protocol.hpp"
#include "qkdsim/public_hash.hpp"
#include "qkdsim/rng.hpp"
#include "qkdsim/wire.hpp"

namespace qkdsim {

enum class AdversaryKind {
    absent,
    guess_tag,       // substitute one chunk, guess its tag bits
    fixed_message,   // substitute a fixed message when digests already match
    ball_search,     // search a Hamming ball around the preferred message
    list,            // precomputed digest-to-witness table
    full_mitm,       // full man-in-the-middle orchestration
};

enum class MitmSearchMode { ball_search, list, full_list };

struct AdversaryStrategy {
    AdversaryKind kind = AdversaryKind::absent;
    std::uint64_t seed = 0;
    std::size_t max_radius = 4;  // ball_search, standalone or inside full_mitm
    std::size_t list_size = 0;   // list, standalone or inside full_mitm
    MitmSearchMode search_mode = MitmSearchMode::full_list;  // full_mitm

    void validate(const SpaceParams& space) const;

    // Accepted forms: "none", "guess_tag", "fixed_message", "ball_search",
    // "ball_search:R", "list:L", "full_mitm", "full_mitm:full_list",
    // "full_mitm:ball_search:R", "full_mitm:list:L".
    static AdversaryStrategy parse(const std::string& text);
    std::string to_string() const;
};

// Substitution table around a base message: for each covered digest value,
// the first message found in an expanding Hamming ball around the base whose
// digest equals it, together with its distance from the base.
struct CollisionList {
    BitString base;
    std::size_t r_bits = 0;
    std::vector<std::optional<BitString>> witness;  // indexed by digest value
    std::vector<std::size_t> distance;              // where witness is set
    std::size_t covered = 0;
    bool exhausted = false;  // ball ran out before `target` digests were found

    std::optional<BitString> lookup(const BitString& digest) const;
};

// Expanding-ball enumeration around m_e (radius 0, then 1, ...; within one
// radius lexicographic) until `target` distinct digests are covered or the
// ball is exhausted.  target = 2^r builds the full table.  The enumeration
// is deterministic; the seed is accepted for interface stability only.
CollisionList build_list(const PublicHashDescriptor& f, const SpaceParams& space,
                         const BitString& m_e, std::size_t target,
                         std::uint64_t seed);

// Distinct digest values reachable within Hamming distance max_radius of
// `center` (the analytic coverage of a ball-search substitution).
std::size_t digests_within_radius(const PublicHashDescriptor& f,
                                  const SpaceParams& space,
                                  const BitString& center,
                                  std::size_t max_radius);

struct InterceptResult {
    BitString eve_bits;      // interceptor's measurement outcomes
    BitString resent_bases;  // bases of the qubits sent onward
    BitString resent_bits;   // values of the qubits sent onward
};

// Measure every qubit in a basis drawn from `rng` (matching bases reproduce
// the prepared bit, mismatched ones flip a fair coin) and re-send the
// measured states.
InterceptResult intercept_resend(const BitString& alice_bases,
                                 const BitString& alice_bits, Rng& rng);

// Same, with the measurement bases chosen by the caller.
InterceptResult intercept_resend_with_bases(const BitString& alice_bases,
                                            const BitString& alice_bits,
                                            const BitString& eve_bases,
                                            Rng& rng);

// One modified message, for the exportable forgery log.
struct ForgeryRecord {
    PhaseId phase;
    std::vector<std::uint8_t> original;
    std::vector<std::uint8_t> forged;
    std::size_t bit_distance = 0;
    BitString tag;           // tag sent with the forgery
    bool tag_reused = true;  // false only when the tag was guessed
};

// "phase <name> original <hex> forged <hex> distance <d> tag <hex>"
std::string forgery_line(const ForgeryRecord& record);

struct PaForgeResult {
    std::vector<std::uint8_t> wire;
    bool reused_verbatim = false;  // sender's message already fit
    bool gave_up = false;
};

// Privacy-amplification forgery for a receiver whose reconciled key length
// differs from the sender's: reuse the sender's message when its output
// length still fits the receiver key, otherwise search the digest fiber of
// the final output-length byte for a compatible substitute.  Requires
// m_bits == 8.
PaForgeResult forge_pa_for_length(const AuthScheme& scheme,
                                  const std::vector<std::uint8_t>& pa_wire,
                                  std::size_t receiver_key_len);

// Substitutes the settings payload chunk under one of the single-message
// strategies (guess_tag, fixed_message, ball_search, list).  Requires
// m_bits == 8 and num_qubits == 8 so the payload occupies exactly one chunk;
// fixed_message / ball_search / list additionally require the two-step
// scheme (they exploit the public compression stage).
class SettingsChunkAdversary : public ChannelAdversary {
  public:
    SettingsChunkAdversary(const ProtocolConfig& config,
                           const AdversaryStrategy& strategy);

    DeliveredMessage on_message(Direction dir, PhaseId phase,
                                const std::vector<std::uint8_t>& wire,
                                const std::optional<BitString>& tag,
                                Rng& rng) override;

    std::size_t forgeries_attempted() const override;
    bool attempted_phase(PhaseId phase) const override;

    const std::vector<ForgeryRecord>& forgery_log() const { return log_; }
    const BitString& base_message() const { return m_e_; }
    bool search_exhausted() const { return search_exhausted_; }

  private:
    AuthScheme scheme_;
    AdversaryStrategy strategy_;
    BitString m_e_;
    std::optional<CollisionList> list_;
    std::vector<ForgeryRecord> log_;
    bool attempted_settings_ = false;
    bool search_exhausted_ = false;
};

// Full man-in-the-middle: intercept-resend on the qubit stream with basis-
// record substitution, chunk-collision forgeries of the settings and
// error-correction maps (reusing the intercepted tags verbatim), verbatim
// forwarding of the confirmation / privacy-amplification / digest-check
// messages, and exact tracking of both resulting final keys.
//
// Under the two-step scheme in immediate mode the orchestration aims for a
// fully undetected session: the substituted basis string is chosen per chunk
// from the digest fiber of the sender's chunk so that the receiver-side
// sifted key lands in the same block-count window as the sender-side one,
// and the forged error-correction message is chosen so that every block of
// the receiver's reconciliation is predictable from the confirmation status.
// Under wegman_carter the class degrades to single-chunk tag-reuse gambles;
// in postponed mode it leaves every classical message untouched.
//
// Requires m_bits == 8 and num_qubits % 8 == 0; two-step immediate forging
// additionally requires the syndrome rows of ec_block_bits to divide 8.
class FullMitmAdversary : public ChannelAdversary {
  public:
    FullMitmAdversary(const ProtocolConfig& config,
                      const AdversaryStrategy& strategy);

    QuantumDelivery on_quantum(const BitString& alice_bits,
                               const BitString& alice_bases,
                               const BitString& bob_bases, Rng& rng) override;
    DeliveredMessage on_message(Direction dir, PhaseId phase,
                                const std::vector<std::uint8_t>& wire,
                                const std::optional<BitString>& tag,
                                Rng& rng) override;
    BitString on_terminal_tag(Direction dir, const BitString& tag,
                              Rng& rng) override;

    std::optional<BitString> eve_key_with_alice() const override;
    std::optional<BitString> eve_key_with_bob() const override;
    std::size_t forgeries_attempted() const override;
    bool attempted_phase(PhaseId phase) const override;

    const std::vector<ForgeryRecord>& forgery_log() const { return log_; }
    std::vector<std::string> export_forgery_lines() const;
    bool gave_up() const { return gave_up_; }
    bool search_exhausted() const { return search_exhausted_; }

  private:
    // Per-block reconciliation forecast: what the receiver's block becomes
    // for every status his decoder can report.
    struct BlockPlan {
        // Entry per status (matched, corrected, failed): the block's final
        // content, or empty+dropped when the block fails and is discarded.
        struct Entry {
            bool dropped = false;
            BitString final;
        };
        std::optional<Entry> by_status[3];
        std::size_t worst_flips = 0;
    };

    bool two_step_active() const;
    std::optional<std::vector<std::uint8_t>> forge_settings(
        const std::vector<std::uint8_t>& wire);
    std::optional<std::vector<std::uint8_t>> forge_ec(
        const std::vector<std::uint8_t>& wire);
    void absorb_confirm(const std::vector<std::uint8_t>& wire);
    DeliveredMessage handle_confirm(const std::vector<std::uint8_t>& wire,
                                    const std::optional<BitString>& tag);
    DeliveredMessage handle_pa(const std::vector<std::uint8_t>& wire,
                               const std::optional<BitString>& tag);
    DeliveredMessage wc_gamble(PhaseId phase,
                               const std::vector<std::uint8_t>& wire,
                               const std::optional<BitString>& tag);
    void log_forgery(PhaseId phase, const std::vector<std::uint8_t>& original,
                     const std::vector<std::uint8_t>& forged,
                     const std::optional<BitString>& tag, bool reused);
    const std::vector<std::uint8_t>& fiber_bytes(std::uint8_t byte_value);
    std::vector<std::uint8_t> settings_candidates(std::size_t chunk_index,
                                                  std::uint8_t alice_byte,
                                                  std::uint8_t eve_byte);

    ProtocolConfig config_;
    AdversaryStrategy strategy_;

    // Quantum-phase record.
    BitString eve_bases_, eve_bits_, bob_bases_;

    // Sender-side (alice) tracking.
    BitString a_sift_;  // known exactly: her record was substituted
    BitString a_perm_;
    BitString a_rec_;
    std::optional<BitString> key_with_alice_;

    // Receiver-side (bob) tracking.
    BitString claimed_;            // substituted settings payload
    BitString b_guess_;            // sifted-key forecast, suspects guessed
    std::vector<bool> b_suspect_;  // per sifted position: outcome unknown
    std::vector<BlockPlan> plans_;
    BitString b_rec_;
    std::optional<BitString> key_with_bob_;

    // Digest fiber cache for 8-bit chunks, keyed by digest value.
    std::vector<std::vector<std::uint8_t>> fiber_cache_;
    std::vector<bool> fiber_cached_;
    std::vector<std::optional<CollisionList>> chunk_lists_;

    std::vector<ForgeryRecord> log_;
    bool attempted_[6] = {false, false, false, false, false, false};
    bool gave_up_ = false;
    bool search_exhausted_ = false;
    bool tracking_ = false;          // reconciliation forecast is live
    bool reconciled_ready_ = false;  // both reconciled keys resolved
};

// nullptr for AdversaryKind::absent.
std::unique_ptr<ChannelAdversary> make_adversary(const ProtocolConfig& config,
                                                 const AdversaryStrategy& strategy);

}  // namespace qkdsim
