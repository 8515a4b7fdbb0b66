#include "qkdsim/protocol.hpp"

#include <utility>

#include "qkdsim/ec.hpp"
#include "qkdsim/errors.hpp"
#include "qkdsim/su2.hpp"

namespace qkdsim {

void ProtocolConfig::validate() const {
    scheme.validate();
    if (one_time_pad_reconciliation)
        throw unimplemented_error(
            "protocol: one-time-pad reconciliation is a recognized "
            "countermeasure placeholder with no implementation");
    if (num_qubits == 0)
        throw contract_error("protocol: num_qubits must be positive");
    if (num_qubits > 4096)
        throw guard_error("protocol: num_qubits above desk-scale limit 4096");
    if (!(channel_error_rate >= 0.0) || !(channel_error_rate <= 0.5))
        throw contract_error("protocol: channel_error_rate must be in [0, 0.5]");
    if (!(qber_abort_threshold > 0.0) || !(qber_abort_threshold <= 0.25))
        throw contract_error(
            "protocol: qber_abort_threshold must be in (0, 0.25]");
    if (ec_block_bits < 2 || ec_block_bits > 16)
        throw contract_error("protocol: ec_block_bits must be in [2, 16]");
    if (pool_bits < scheme.key_cost_per_tag())
        throw contract_error("protocol: pool_bits cannot cover a single tag");
}

const char* session_status_name(SessionStatus status) {
    switch (status) {
        case SessionStatus::completed: return "completed";
        case SessionStatus::aborted_auth: return "aborted_auth";
        case SessionStatus::aborted_qber: return "aborted_qber";
        case SessionStatus::aborted_check: return "aborted_check";
    }
    return "unknown";
}

const char* abort_reason_name(AbortReason reason) {
    switch (reason) {
        case AbortReason::none: return "none";
        case AbortReason::peer_abort: return "peer_abort";
        case AbortReason::auth_timestamp: return "auth_timestamp";
        case AbortReason::auth_settings: return "auth_settings";
        case AbortReason::auth_ec_maps: return "auth_ec_maps";
        case AbortReason::auth_ec_confirm: return "auth_ec_confirm";
        case AbortReason::auth_pa_map: return "auth_pa_map";
        case AbortReason::auth_check: return "auth_check";
        case AbortReason::auth_terminal: return "auth_terminal";
        case AbortReason::bad_format: return "bad_format";
        case AbortReason::empty_sift: return "empty_sift";
        case AbortReason::qber_exceeded: return "qber_exceeded";
        case AbortReason::pa_underflow: return "pa_underflow";
        case AbortReason::pa_invalid: return "pa_invalid";
        case AbortReason::check_mismatch: return "check_mismatch";
    }
    return "unknown";
}

BitString sift(const BitString& own_bases, const BitString& peer_bases,
               const BitString& own_bits) {
    if (own_bases.size() != peer_bases.size() ||
        own_bases.size() != own_bits.size())
        throw contract_error("sift: input lengths differ");
    BitString kept;
    for (std::size_t i = 0; i < own_bases.size(); ++i)
        if (own_bases.bit(i) == peer_bases.bit(i))
            kept.append(BitString::from_uint(own_bits.bit(i), 1));
    return kept;
}

BitString pa_compress(const BitString& band, const BitString& key,
                      std::size_t out_len) {
    if (out_len == 0) return BitString();
    if (band.size() != out_len + key.size() - 1)
        throw contract_error("pa_compress: band length must be out+in-1");
    BitString out(out_len);
    for (std::size_t i = 0; i < out_len; ++i) {
        int acc = 0;
        for (std::size_t j = 0; j < key.size(); ++j)
            acc ^= band.bit(i + key.size() - 1 - j) & key.bit(j);
        out.set_bit(i, acc);
    }
    return out;
}

ChannelAdversary::QuantumDelivery ChannelAdversary::on_quantum(
    const BitString& alice_bits, const BitString& alice_bases,
    const BitString& bob_bases, Rng&) {
    return {alice_bits, alice_bases, bob_bases};
}

ChannelAdversary::DeliveredMessage ChannelAdversary::on_message(
    Direction, PhaseId, const std::vector<std::uint8_t>& wire,
    const std::optional<BitString>& tag, Rng&) {
    return {wire, tag};
}

BitString ChannelAdversary::on_terminal_tag(Direction, const BitString& tag,
                                            Rng&) {
    return tag;
}

std::optional<BitString> ChannelAdversary::eve_key_with_alice() const {
    return std::nullopt;
}

std::optional<BitString> ChannelAdversary::eve_key_with_bob() const {
    return std::nullopt;
}

std::size_t ChannelAdversary::forgeries_attempted() const { return 0; }

bool ChannelAdversary::attempted_phase(PhaseId) const { return false; }

bool SessionOutcome::phase_forged_accepted(PhaseId phase) const {
    for (const MessageRecord& rec : messages)
        if (rec.phase == phase && rec.modified && rec.accepted) return true;
    return false;
}

bool SessionOutcome::phase_modified(PhaseId phase) const {
    for (const MessageRecord& rec : messages)
        if (rec.phase == phase && rec.modified) return true;
    return false;
}

namespace {

struct Delivery {
    bool tag_ok = false;
    bool format_ok = false;
    PhaseMessage decoded;
};

struct Channel {
    const ProtocolConfig& cfg;
    ChannelAdversary& adv;
    Rng& adv_rng;
    SessionOutcome& out;
    KeyPool a_send, b_recv;  // alice->bob tag stream, both ends
    KeyPool b_send, a_recv;  // bob->alice tag stream, both ends
    std::vector<std::uint8_t> sent_ab, delivered_ab;  // postponed streams
    std::vector<std::uint8_t> sent_ba, delivered_ba;

    Channel(const ProtocolConfig& c, ChannelAdversary& a, Rng& ar,
            SessionOutcome& o, std::uint64_t seed_ab, std::uint64_t seed_ba)
        : cfg(c),
          adv(a),
          adv_rng(ar),
          out(o),
          a_send(seed_ab, c.pool_bits),
          b_recv(seed_ab, c.pool_bits),
          b_send(seed_ba, c.pool_bits),
          a_recv(seed_ba, c.pool_bits) {}

    Delivery deliver(Direction dir, const PhaseMessage& msg) {
        const bool immediate = cfg.auth_mode == AuthMode::immediate;
        std::vector<std::uint8_t> wire = encode(msg);
        std::optional<BitString> tag;
        if (immediate) {
            KeyPool& pool = dir == Direction::alice_to_bob ? a_send : b_send;
            tag = tag_encoding(cfg.scheme, pool, wire);
        } else {
            auto& stream = dir == Direction::alice_to_bob ? sent_ab : sent_ba;
            stream.insert(stream.end(), wire.begin(), wire.end());
        }

        ChannelAdversary::DeliveredMessage delivered =
            adv.on_message(dir, msg.phase(), wire, tag, adv_rng);

        Delivery result;
        if (immediate) {
            KeyPool& pool = dir == Direction::alice_to_bob ? b_recv : a_recv;
            // The receiver always walks its key stream so that a mangled
            // message cannot desynchronize later verifications.
            result.tag_ok = verify_encoding(
                cfg.scheme, pool, delivered.wire,
                delivered.tag ? *delivered.tag : BitString());
        } else {
            auto& stream =
                dir == Direction::alice_to_bob ? delivered_ab : delivered_ba;
            stream.insert(stream.end(), delivered.wire.begin(),
                          delivered.wire.end());
            result.tag_ok = true;
        }
        try {
            result.decoded = decode(delivered.wire);
            result.format_ok = result.decoded.phase() == msg.phase();
        } catch (const parse_error&) {
            result.format_ok = false;
        }

        MessageRecord rec;
        rec.dir = dir;
        rec.phase = msg.phase();
        rec.modified = delivered.wire != wire || delivered.tag != tag;
        rec.had_tag = immediate;
        rec.accepted = result.tag_ok && result.format_ok;
        out.messages.push_back(rec);
        out.transcript.entries.push_back(
            {dir, msg.phase(), delivered.wire, delivered.tag});
        return result;
    }

    // Postponed-mode terminal tag exchange; true when the receiver accepts.
    bool terminal(Direction dir) {
        KeyPool& send = dir == Direction::alice_to_bob ? a_send : b_send;
        KeyPool& recv = dir == Direction::alice_to_bob ? b_recv : a_recv;
        const auto& sent = dir == Direction::alice_to_bob ? sent_ab : sent_ba;
        const auto& got =
            dir == Direction::alice_to_bob ? delivered_ab : delivered_ba;
        BitString tag = tag_encoding(cfg.scheme, send, sent);
        BitString delivered_tag = adv.on_terminal_tag(dir, tag, adv_rng);
        bool ok = verify_encoding(cfg.scheme, recv, got, delivered_tag);
        if (dir == Direction::alice_to_bob)
            out.transcript.terminal_tag_alice_to_bob = delivered_tag;
        else
            out.transcript.terminal_tag_bob_to_alice = delivered_tag;
        return ok;
    }
};

BitString pad_to(const BitString& key, std::size_t len) {
    BitString padded = key;
    if (padded.size() < len) padded.append(BitString(len - padded.size()));
    return padded;
}

SessionStatus status_for(AbortReason reason) {
    switch (reason) {
        case AbortReason::empty_sift:
        case AbortReason::qber_exceeded:
        case AbortReason::pa_underflow:
            return SessionStatus::aborted_qber;
        case AbortReason::check_mismatch:
            return SessionStatus::aborted_check;
        default:
            return SessionStatus::aborted_auth;
    }
}

}  // namespace

SessionOutcome run_session(const ProtocolConfig& cfg,
                           ChannelAdversary* adversary) {
    cfg.validate();

    SessionOutcome out;
    Rng rng(split_seed(cfg.seed, 0));
    Rng adv_rng(split_seed(cfg.seed, 1));
    ChannelAdversary passive;
    ChannelAdversary& adv = adversary ? *adversary : passive;
    Channel ch(cfg, adv, adv_rng, out, split_seed(cfg.seed, 2),
               split_seed(cfg.seed, 3));

    auto finish = [&]() -> SessionOutcome& {
        out.forgeries_attempted = adv.forgeries_attempted();
        std::size_t accepted = 0;
        for (const MessageRecord& rec : out.messages)
            if (rec.modified && rec.accepted) ++accepted;
        out.forgeries_accepted = accepted;
        out.eve_key_with_alice = adv.eve_key_with_alice();
        out.eve_key_with_bob = adv.eve_key_with_bob();
        out.alice_pool_consumed = ch.a_send.consumed() + ch.a_recv.consumed();
        out.bob_pool_consumed = ch.b_send.consumed() + ch.b_recv.consumed();
        return out;
    };
    auto abort_alice = [&](AbortReason reason) -> SessionOutcome {
        out.alice_abort = reason;
        out.bob_abort = AbortReason::peer_abort;
        out.status = status_for(reason);
        return finish();
    };
    auto abort_bob = [&](AbortReason reason) -> SessionOutcome {
        out.bob_abort = reason;
        out.alice_abort = AbortReason::peer_abort;
        out.status = status_for(reason);
        return finish();
    };

    const std::size_t nq = cfg.num_qubits;
    const std::size_t n = cfg.scheme.space.n_bits;

    // Quantum phase: prepare, (possibly) intercept, measure.  The channel
    // error rate acts on the receiving measurement when bases match.
    BitString alice_bits = rng_bits(rng, nq);
    BitString alice_bases = rng_bits(rng, nq);
    BitString bob_bases = rng_bits(rng, nq);
    ChannelAdversary::QuantumDelivery qd =
        adv.on_quantum(alice_bits, alice_bases, bob_bases, adv_rng);
    if (qd.bits.size() != nq || qd.bases.size() != nq ||
        qd.record_to_alice.size() != nq)
        throw contract_error("adversary: quantum delivery size mismatch");
    BitString bob_outcomes(nq);
    for (std::size_t i = 0; i < nq; ++i) {
        int value;
        if (qd.bases.bit(i) == bob_bases.bit(i)) {
            value = qd.bits.bit(i);
            if (cfg.channel_error_rate > 0.0 &&
                rng_coin(rng, cfg.channel_error_rate))
                value ^= 1;
        } else {
            value = rng_bit(rng);
        }
        bob_outcomes.set_bit(i, value);
    }
    // Bob's measurement-basis record reaches Alice outside the
    // authenticated layer; the adversary has already chosen its content.
    const BitString& record = qd.record_to_alice;

    // Timestamp closes the quantum phase.
    PhaseMessage ts{TimestampMsg{static_cast<std::uint32_t>(rng())}};
    Delivery d = ch.deliver(Direction::bob_to_alice, ts);
    if (!d.format_ok) return abort_alice(AbortReason::bad_format);
    if (!d.tag_ok) return abort_alice(AbortReason::auth_timestamp);

    // Alice sifts against the record she was handed.
    BitString a_sift = sift(alice_bases, record, alice_bits);
    out.alice_sifted = a_sift.size();
    if (a_sift.empty()) return abort_alice(AbortReason::empty_sift);

    // Settings: Alice reveals her basis choices.
    PhaseMessage st{SettingsMsg{alice_bases}};
    d = ch.deliver(Direction::alice_to_bob, st);
    if (!d.format_ok) return abort_bob(AbortReason::bad_format);
    if (!d.tag_ok) return abort_bob(AbortReason::auth_settings);
    const BitString& claimed = std::get<SettingsMsg>(d.decoded.body).bases;
    if (claimed.size() != nq) return abort_bob(AbortReason::bad_format);
    BitString b_sift = sift(bob_bases, claimed, bob_outcomes);
    out.bob_sifted = b_sift.size();
    if (b_sift.empty()) return abort_bob(AbortReason::empty_sift);

    // Error correction maps, Alice -> Bob.
    std::uint32_t perm_seed = static_cast<std::uint32_t>(rng());
    std::uint32_t matrix_seed = static_cast<std::uint32_t>(rng());
    BitString a_perm = ec_permute(a_sift, perm_seed);
    BitString syndromes = ec_syndromes(a_perm, matrix_seed, cfg.ec_block_bits);
    PhaseMessage em{EcMapsMsg{perm_seed, matrix_seed, syndromes}};
    d = ch.deliver(Direction::alice_to_bob, em);
    if (!d.format_ok) return abort_bob(AbortReason::bad_format);
    if (!d.tag_ok) return abort_bob(AbortReason::auth_ec_maps);
    const EcMapsMsg& em2 = std::get<EcMapsMsg>(d.decoded.body);
    EcReceiverOutcome rec = ec_receiver(b_sift, em2.perm_seed, em2.matrix_seed,
                                        cfg.ec_block_bits, em2.syndromes);
    if (!rec.ok) return abort_bob(AbortReason::bad_format);
    BitString b_rec = rec.reconciled;
    out.bob_reconciled = b_rec.size();
    out.corrected_bits = rec.corrected_bits;

    // Confirmation, Bob -> Alice.
    PhaseMessage cf{
        EcConfirmMsg{ec_statuses_to_bits(rec.statuses), rec.corrected_bits}};
    d = ch.deliver(Direction::bob_to_alice, cf);
    if (!d.format_ok) return abort_alice(AbortReason::bad_format);
    if (!d.tag_ok) return abort_alice(AbortReason::auth_ec_confirm);
    const EcConfirmMsg& cf2 = std::get<EcConfirmMsg>(d.decoded.body);
    bool statuses_valid = false;
    std::vector<BlockStatus> statuses =
        ec_statuses_from_bits(cf2.block_status, &statuses_valid);
    if (!statuses_valid ||
        statuses.size() != ec_num_blocks(a_sift.size(), cfg.ec_block_bits))
        return abort_alice(AbortReason::bad_format);
    BitString a_rec = ec_apply_statuses(a_perm, cfg.ec_block_bits, statuses);
    out.alice_reconciled = a_rec.size();
    out.qber_estimate = static_cast<double>(cf2.corrected_bits) /
                        static_cast<double>(a_sift.size());
    if (out.qber_estimate > cfg.qber_abort_threshold)
        return abort_alice(AbortReason::qber_exceeded);

    // Privacy amplification map, Alice -> Bob.  Every syndrome bit counts as
    // leaked; the security margin comes on top.  The band field has a fixed
    // 2 * num_qubits size so the message length does not depend on the key
    // length; receivers use the leading out_len + key_len - 1 bits.
    std::size_t leaked = syndromes.size();
    if (a_rec.size() <= leaked + cfg.pa_security_margin_bits)
        return abort_alice(AbortReason::pa_underflow);
    std::size_t out_len = a_rec.size() - leaked - cfg.pa_security_margin_bits;
    BitString pa_seed = rng_bits(rng, 2 * nq);
    PhaseMessage pa{PaMapMsg{static_cast<std::uint32_t>(out_len), pa_seed}};
    d = ch.deliver(Direction::alice_to_bob, pa);
    if (!d.format_ok) return abort_bob(AbortReason::bad_format);
    if (!d.tag_ok) return abort_bob(AbortReason::auth_pa_map);
    const PaMapMsg& pa2 = std::get<PaMapMsg>(d.decoded.body);
    if (pa2.out_len == 0 || pa2.out_len > b_rec.size() ||
        pa2.seed.size() != 2 * nq ||
        pa2.out_len + b_rec.size() - 1 > pa2.seed.size())
        return abort_bob(AbortReason::pa_invalid);
    out.alice_final_key = pa_compress(
        pa_seed.slice(0, out_len + a_rec.size() - 1), a_rec, out_len);
    out.bob_final_key = pa_compress(
        pa2.seed.slice(0, pa2.out_len + b_rec.size() - 1), b_rec, pa2.out_len);
    out.pa_out_len = out_len;

    // Optional secret-keyed digest comparison of the reconciled keys, padded
    // to a fixed num_qubits width so both pools advance identically.  The
    // digest key comes off the alice->bob pool before the message's own tag.
    if (cfg.secret_hash_check) {
        Su2Key alice_check{ch.a_send.draw(n + nq - 1), ch.a_send.draw(n)};
        Su2Key bob_check{ch.b_recv.draw(n + nq - 1), ch.b_recv.draw(n)};
        BitString value = eval_su2(alice_check, pad_to(a_rec, nq));
        PhaseMessage cm{CheckMsg{value}};
        d = ch.deliver(Direction::alice_to_bob, cm);
        if (!d.format_ok) return abort_bob(AbortReason::bad_format);
        if (!d.tag_ok) return abort_bob(AbortReason::auth_check);
        const CheckMsg& cm2 = std::get<CheckMsg>(d.decoded.body);
        if (cm2.value.size() != n) return abort_bob(AbortReason::bad_format);
        BitString expect = eval_su2(bob_check, pad_to(b_rec, nq));
        if (!(cm2.value == expect))
            return abort_bob(AbortReason::check_mismatch);
    }

    if (cfg.auth_mode == AuthMode::postponed) {
        if (!ch.terminal(Direction::alice_to_bob))
            return abort_bob(AbortReason::auth_terminal);
        if (!ch.terminal(Direction::bob_to_alice))
            return abort_alice(AbortReason::auth_terminal);
    }

    out.status = SessionStatus::completed;
    return finish();
}

}  // namespace qkdsim
