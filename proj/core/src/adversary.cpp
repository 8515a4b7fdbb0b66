#include "qkdsim/adversary.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <variant>

#include "qkdsim/errors.hpp"

namespace qkdsim {

namespace {

// A block with s unknown receiver bits spawns 2^s correction branches; four
// keeps that enumeration cheap while tolerating the suspect densities the
// basis-record forgery actually produces.
constexpr std::size_t kMaxBlockSuspects = 4;

BitString byte_bits(std::uint8_t value) {
    return BitString::from_uint(value, 8);
}

std::size_t digest_of_byte(const PublicHashDescriptor& f, std::size_t r_bits,
                           std::uint8_t value) {
    return static_cast<std::size_t>(
        eval_public_hash(f, r_bits, byte_bits(value)).to_uint());
}

// Visit the Hamming ball around `center`: radius 0, 1, ... up to max_radius,
// lexicographic position combinations within each radius.  Stops early when
// the visitor returns false.
template <typename Visitor>
void visit_ball(const BitString& center, std::size_t max_radius, Visitor&& fn) {
    const std::size_t m = center.size();
    if (!fn(center, std::size_t{0})) return;
    const std::size_t top = std::min(max_radius, m);
    for (std::size_t radius = 1; radius <= top; ++radius) {
        std::vector<std::size_t> idx(radius);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        while (true) {
            BitString cand = center;
            for (std::size_t p : idx) cand.flip_bit(p);
            if (!fn(cand, radius)) return;
            std::size_t i = radius;
            bool advanced = false;
            while (i-- > 0) {
                if (idx[i] < m - (radius - i)) {
                    ++idx[i];
                    for (std::size_t j = i + 1; j < radius; ++j)
                        idx[j] = idx[j - 1] + 1;
                    advanced = true;
                    break;
                }
            }
            if (!advanced) break;
        }
    }
}

std::size_t parse_number(const std::string& text, const char* what) {
    try {
        std::size_t pos = 0;
        const unsigned long value = std::stoul(text, &pos);
        if (pos != text.size()) throw parse_error(std::string("trailing characters in ") + what);
        return static_cast<std::size_t>(value);
    } catch (const parse_error&) {
        throw;
    } catch (const std::exception&) {
        throw parse_error(std::string("expected a number for ") + what + ", got '" + text + "'");
    }
}

std::vector<std::string> split_colon(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(':', start);
        if (pos == std::string::npos) {
            out.push_back(text.substr(start));
            return out;
        }
        out.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
}

std::size_t wire_bit_distance(const std::vector<std::uint8_t>& a,
                              const std::vector<std::uint8_t>& b) {
    std::size_t dist = 0;
    const std::size_t common = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < common; ++i)
        dist += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(a[i] ^ b[i])));
    for (std::size_t i = common; i < a.size(); ++i)
        dist += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(a[i])));
    for (std::size_t i = common; i < b.size(); ++i)
        dist += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(b[i])));
    return dist;
}

// Every modified chunk of the forged wire must land in the same digest fiber
// as the original chunk; the substituted tag then verifies unchanged.
void assert_chunk_collisions(const AuthScheme& scheme,
                             const std::vector<std::uint8_t>& original,
                             const std::vector<std::uint8_t>& forged) {
    if (scheme.kind != SchemeKind::two_step) return;
    if (original.size() != forged.size())
        throw contract_error("forgery soundness: wire length changed");
    if (scheme.space.m_bits != 8)
        throw contract_error("forgery soundness check expects 8-bit chunks");
    for (std::size_t i = 0; i < original.size(); ++i) {
        if (original[i] == forged[i]) continue;
        const std::size_t za = digest_of_byte(scheme.f, scheme.space.r_bits, original[i]);
        const std::size_t zf = digest_of_byte(scheme.f, scheme.space.r_bits, forged[i]);
        if (za != zf)
            throw contract_error("forgery soundness: chunk digest changed");
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// AdversaryStrategy

void AdversaryStrategy::validate(const SpaceParams& space) const {
    const std::size_t digests = std::size_t{1} << space.r_bits;
    const bool uses_ball = kind == AdversaryKind::ball_search ||
                           (kind == AdversaryKind::full_mitm &&
                            search_mode == MitmSearchMode::ball_search);
    const bool uses_list = kind == AdversaryKind::list ||
                           (kind == AdversaryKind::full_mitm &&
                            search_mode == MitmSearchMode::list);
    if (uses_ball && max_radius > space.m_bits)
        throw contract_error("adversary: ball radius exceeds chunk length");
    if (uses_list && list_size > digests)
        throw contract_error("adversary: list size exceeds digest count");
}

AdversaryStrategy AdversaryStrategy::parse(const std::string& text) {
    AdversaryStrategy s;
    const std::vector<std::string> tok = split_colon(text);
    const std::string& head = tok[0];
    if (head == "none" || head == "absent") {
        s.kind = AdversaryKind::absent;
        if (tok.size() > 1) throw parse_error("adversary 'none' takes no arguments");
        return s;
    }
    if (head == "guess_tag" || head == "fixed_message") {
        s.kind = head == "guess_tag" ? AdversaryKind::guess_tag
                                     : AdversaryKind::fixed_message;
        if (tok.size() > 1) throw parse_error("adversary '" + head + "' takes no arguments");
        return s;
    }
    if (head == "ball_search") {
        s.kind = AdversaryKind::ball_search;
        if (tok.size() > 2) throw parse_error("ball_search takes at most one argument");
        if (tok.size() == 2) s.max_radius = parse_number(tok[1], "ball radius");
        return s;
    }
    if (head == "list") {
        s.kind = AdversaryKind::list;
        if (tok.size() != 2) throw parse_error("list requires a size, e.g. list:8");
        s.list_size = parse_number(tok[1], "list size");
        return s;
    }
    if (head == "full_mitm") {
        s.kind = AdversaryKind::full_mitm;
        if (tok.size() == 1) {
            s.search_mode = MitmSearchMode::full_list;
            return s;
        }
        const std::string& mode = tok[1];
        if (mode == "full_list") {
            if (tok.size() > 2) throw parse_error("full_mitm:full_list takes no arguments");
            s.search_mode = MitmSearchMode::full_list;
        } else if (mode == "ball_search") {
            s.search_mode = MitmSearchMode::ball_search;
            if (tok.size() > 3) throw parse_error("full_mitm:ball_search takes at most one argument");
            if (tok.size() == 3) s.max_radius = parse_number(tok[2], "ball radius");
        } else if (mode == "list") {
            s.search_mode = MitmSearchMode::list;
            if (tok.size() != 3) throw parse_error("full_mitm:list requires a size");
            s.list_size = parse_number(tok[2], "list size");
        } else {
            throw parse_error("unknown mitm search mode '" + mode + "'");
        }
        return s;
    }
    throw parse_error("unknown adversary '" + head + "'");
}

std::string AdversaryStrategy::to_string() const {
    switch (kind) {
        case AdversaryKind::absent: return "none";
        case AdversaryKind::guess_tag: return "guess_tag";
        case AdversaryKind::fixed_message: return "fixed_message";
        case AdversaryKind::ball_search:
            return "ball_search:" + std::to_string(max_radius);
        case AdversaryKind::list:
            return "list:" + std::to_string(list_size);
        case AdversaryKind::full_mitm:
            switch (search_mode) {
                case MitmSearchMode::full_list: return "full_mitm:full_list";
                case MitmSearchMode::ball_search:
                    return "full_mitm:ball_search:" + std::to_string(max_radius);
                case MitmSearchMode::list:
                    return "full_mitm:list:" + std::to_string(list_size);
            }
    }
    throw contract_error("unreachable adversary kind");
}

// ---------------------------------------------------------------------------
// CollisionList

std::optional<BitString> CollisionList::lookup(const BitString& digest) const {
    if (digest.size() != r_bits)
        throw contract_error("collision list: digest length mismatch");
    const std::size_t z = static_cast<std::size_t>(digest.to_uint());
    return witness[z];
}

CollisionList build_list(const PublicHashDescriptor& f, const SpaceParams& space,
                         const BitString& m_e, std::size_t target,
                         std::uint64_t seed) {
    (void)seed;  // the enumeration is deterministic; accepted for interface stability
    if (m_e.size() != space.m_bits)
        throw contract_error("build_list: base length must equal the chunk length");
    const std::size_t digests = std::size_t{1} << space.r_bits;
    if (target > digests)
        throw contract_error("build_list: target exceeds the number of digests");
    CollisionList out;
    out.base = m_e;
    out.r_bits = space.r_bits;
    out.witness.assign(digests, std::nullopt);
    out.distance.assign(digests, 0);
    if (target == 0) return out;
    visit_ball(m_e, space.m_bits, [&](const BitString& cand, std::size_t radius) {
        const std::size_t z =
            static_cast<std::size_t>(eval_public_hash(f, space.r_bits, cand).to_uint());
        if (!out.witness[z]) {
            out.witness[z] = cand;
            out.distance[z] = radius;
            ++out.covered;
        }
        return out.covered < target;
    });
    out.exhausted = out.covered < target;
    return out;
}

std::size_t digests_within_radius(const PublicHashDescriptor& f,
                                  const SpaceParams& space,
                                  const BitString& center,
                                  std::size_t max_radius) {
    if (center.size() != space.m_bits)
        throw contract_error("digests_within_radius: center length must equal the chunk length");
    std::vector<bool> seen(std::size_t{1} << space.r_bits, false);
    std::size_t count = 0;
    visit_ball(center, max_radius, [&](const BitString& cand, std::size_t) {
        const std::size_t z =
            static_cast<std::size_t>(eval_public_hash(f, space.r_bits, cand).to_uint());
        if (!seen[z]) {
            seen[z] = true;
            ++count;
        }
        return true;
    });
    return count;
}

// ---------------------------------------------------------------------------
// Intercept-resend

InterceptResult intercept_resend_with_bases(const BitString& alice_bases,
                                            const BitString& alice_bits,
                                            const BitString& eve_bases,
                                            Rng& rng) {
    if (alice_bases.size() != alice_bits.size() ||
        eve_bases.size() != alice_bits.size())
        throw contract_error("intercept_resend: length mismatch");
    InterceptResult out;
    out.eve_bits = BitString(alice_bits.size());
    for (std::size_t i = 0; i < alice_bits.size(); ++i) {
        const int bit = eve_bases.bit(i) == alice_bases.bit(i) ? alice_bits.bit(i)
                                                               : rng_bit(rng);
        out.eve_bits.set_bit(i, bit);
    }
    out.resent_bases = eve_bases;
    out.resent_bits = out.eve_bits;
    return out;
}

InterceptResult intercept_resend(const BitString& alice_bases,
                                 const BitString& alice_bits, Rng& rng) {
    const BitString eve_bases = rng_bits(rng, alice_bases.size());
    return intercept_resend_with_bases(alice_bases, alice_bits, eve_bases, rng);
}

// ---------------------------------------------------------------------------
// Forgery log

std::string forgery_line(const ForgeryRecord& record) {
    std::ostringstream os;
    os << "phase=" << phase_name(record.phase)
       << " original=" << bytes_to_hex(record.original)
       << " forged=" << bytes_to_hex(record.forged)
       << " distance=" << record.bit_distance
       << " tag=" << (record.tag.empty() ? std::string("-") : record.tag.to_hex())
       << " reused=" << (record.tag_reused ? 1 : 0);
    return os.str();
}

// ---------------------------------------------------------------------------
// Privacy-amplification forgery

PaForgeResult forge_pa_for_length(const AuthScheme& scheme,
                                  const std::vector<std::uint8_t>& pa_wire,
                                  std::size_t receiver_key_len) {
    if (scheme.kind != SchemeKind::two_step)
        throw contract_error("forge_pa_for_length requires the two-step scheme");
    if (scheme.space.m_bits != 8)
        throw contract_error("forge_pa_for_length requires 8-bit chunks");
    const PhaseMessage msg = decode(pa_wire);
    if (msg.phase() != PhaseId::pa_map)
        throw contract_error("forge_pa_for_length: not a pa_map message");
    const PaMapMsg& pa = std::get<PaMapMsg>(msg.body);
    const std::size_t seed_bits = pa.seed.size();
    const auto fits = [&](std::uint32_t out_len) {
        return out_len >= 1 && out_len <= receiver_key_len &&
               static_cast<std::size_t>(out_len) + receiver_key_len - 1 <= seed_bits;
    };
    if (fits(pa.out_len)) return {pa_wire, true, false};
    // The output length is the big-endian word in wire bytes 1..4; search the
    // digest fiber of its final byte for a length the receiver can accept,
    // preferring the largest (it maximises the key that survives).
    const std::uint32_t base = pa.out_len & ~std::uint32_t{0xff};
    const std::size_t z = digest_of_byte(scheme.f, scheme.space.r_bits, pa_wire[4]);
    const std::vector<BitString> fiber =
        enumerate_preimages(scheme.f, scheme.space.r_bits, 8, BitString::from_uint(z, scheme.space.r_bits));
    std::optional<std::uint32_t> best;
    for (const BitString& member : fiber) {
        const std::uint32_t cand = base | static_cast<std::uint32_t>(member.to_uint());
        if (fits(cand) && (!best || cand > *best)) best = cand;
    }
    if (!best) return {pa_wire, false, true};
    std::vector<std::uint8_t> forged = pa_wire;
    forged[4] = static_cast<std::uint8_t>(*best & 0xff);
    assert_chunk_collisions(scheme, pa_wire, forged);
    return {forged, false, false};
}

// ---------------------------------------------------------------------------
// Single-chunk substitution strategies

SettingsChunkAdversary::SettingsChunkAdversary(const ProtocolConfig& config,
                                               const AdversaryStrategy& strategy)
    : scheme_(config.scheme), strategy_(strategy) {
    strategy_.validate(scheme_.space);
    if (scheme_.space.m_bits != 8 || config.num_qubits != 8)
        throw contract_error(
            "single-chunk adversary requires 8-bit chunks and 8 qubits");
    switch (strategy_.kind) {
        case AdversaryKind::guess_tag:
            break;
        case AdversaryKind::fixed_message:
        case AdversaryKind::ball_search:
        case AdversaryKind::list:
            if (scheme_.kind != SchemeKind::two_step)
                throw contract_error(
                    "collision strategies require the two-step scheme");
            break;
        default:
            throw contract_error("single-chunk adversary: unsupported strategy");
    }
    Rng pick(strategy_.seed);
    m_e_ = rng_bits(pick, 8);
    if (strategy_.kind == AdversaryKind::list)
        list_ = build_list(scheme_.f, scheme_.space, m_e_, strategy_.list_size,
                           strategy_.seed);
}

ChannelAdversary::DeliveredMessage SettingsChunkAdversary::on_message(
    Direction dir, PhaseId phase, const std::vector<std::uint8_t>& wire,
    const std::optional<BitString>& tag, Rng& rng) {
    if (dir != Direction::alice_to_bob || phase != PhaseId::settings)
        return {wire, tag};
    if (wire.size() != 6)
        throw contract_error("single-chunk adversary: unexpected settings size");
    const std::uint8_t payload = wire[5];

    std::optional<std::uint8_t> substitute;
    std::optional<BitString> out_tag = tag;
    bool reused = true;

    switch (strategy_.kind) {
        case AdversaryKind::guess_tag: {
            substitute = static_cast<std::uint8_t>(m_e_.to_uint());
            if (tag) {
                const std::size_t n = scheme_.space.n_bits;
                BitString guessed = *tag;
                const BitString fresh = rng_bits(rng, n);
                for (std::size_t i = 0; i < n; ++i)
                    guessed.set_bit(5 * n + i, fresh.bit(i));
                out_tag = guessed;
                reused = false;
            }
            attempted_settings_ = true;
            break;
        }
        case AdversaryKind::fixed_message: {
            const std::size_t za = digest_of_byte(scheme_.f, scheme_.space.r_bits, payload);
            const std::size_t ze =
                digest_of_byte(scheme_.f, scheme_.space.r_bits,
                               static_cast<std::uint8_t>(m_e_.to_uint()));
            if (za == ze) {
                substitute = static_cast<std::uint8_t>(m_e_.to_uint());
                attempted_settings_ = true;
            }
            break;
        }
        case AdversaryKind::ball_search: {
            const BitString za = eval_public_hash(scheme_.f, scheme_.space.r_bits,
                                                  byte_bits(payload));
            const std::optional<BitString> hit = find_collision_in_ball(
                scheme_.f, scheme_.space.r_bits, m_e_, za, strategy_.max_radius);
            if (hit) {
                substitute = static_cast<std::uint8_t>(hit->to_uint());
                attempted_settings_ = true;
            } else {
                search_exhausted_ = true;
            }
            break;
        }
        case AdversaryKind::list: {
            const BitString za = eval_public_hash(scheme_.f, scheme_.space.r_bits,
                                                  byte_bits(payload));
            const std::optional<BitString> hit = list_->lookup(za);
            if (hit) {
                substitute = static_cast<std::uint8_t>(hit->to_uint());
                attempted_settings_ = true;
            }
            break;
        }
        default:
            break;
    }

    if (!substitute) return {wire, tag};
    std::vector<std::uint8_t> forged = wire;
    forged[5] = *substitute;
    if (strategy_.kind != AdversaryKind::guess_tag)
        assert_chunk_collisions(scheme_, wire, forged);
    const bool tag_changed = out_tag != tag;
    if (forged != wire || tag_changed) {
        ForgeryRecord rec;
        rec.phase = phase;
        rec.original = wire;
        rec.forged = forged;
        rec.bit_distance = wire_bit_distance(wire, forged);
        if (out_tag) rec.tag = *out_tag;
        rec.tag_reused = reused;
        log_.push_back(std::move(rec));
    }
    return {std::move(forged), std::move(out_tag)};
}

std::size_t SettingsChunkAdversary::forgeries_attempted() const {
    return log_.size();
}

bool SettingsChunkAdversary::attempted_phase(PhaseId phase) const {
    return phase == PhaseId::settings && attempted_settings_;
}

// ---------------------------------------------------------------------------
// Full man-in-the-middle

FullMitmAdversary::FullMitmAdversary(const ProtocolConfig& config,
                                     const AdversaryStrategy& strategy)
    : config_(config), strategy_(strategy) {
    if (strategy_.kind != AdversaryKind::full_mitm)
        throw contract_error("FullMitmAdversary requires the full_mitm strategy");
    strategy_.validate(config_.scheme.space);
    const SpaceParams& space = config_.scheme.space;
    if (space.m_bits != 8)
        throw contract_error("full_mitm requires 8-bit chunks");
    if (config_.num_qubits % 8 != 0)
        throw contract_error("full_mitm requires a whole-byte qubit count");
    if (config_.scheme.kind == SchemeKind::two_step &&
        config_.auth_mode == AuthMode::immediate) {
        const std::size_t rows = ec_syndrome_rows(config_.ec_block_bits);
        if (8 % rows != 0)
            throw contract_error(
                "full_mitm requires syndrome rows of 1, 2, 4 or 8 bits");
    }
    Rng pick(strategy_.seed);
    eve_bases_ = rng_bits(pick, config_.num_qubits);
    if (config_.scheme.kind == SchemeKind::two_step) {
        fiber_cache_.resize(std::size_t{1} << space.r_bits);
        fiber_cached_.assign(std::size_t{1} << space.r_bits, false);
        chunk_lists_.resize(256);
    }
}

bool FullMitmAdversary::two_step_active() const {
    return config_.scheme.kind == SchemeKind::two_step &&
           config_.auth_mode == AuthMode::immediate;
}

const std::vector<std::uint8_t>& FullMitmAdversary::fiber_bytes(
    std::uint8_t byte_value) {
    const SpaceParams& space = config_.scheme.space;
    const std::size_t z = digest_of_byte(config_.scheme.f, space.r_bits, byte_value);
    if (!fiber_cached_[z]) {
        const std::vector<BitString> members = enumerate_preimages(
            config_.scheme.f, space.r_bits, 8, BitString::from_uint(z, space.r_bits));
        std::vector<std::uint8_t>& out = fiber_cache_[z];
        out.reserve(members.size());
        for (const BitString& member : members)
            out.push_back(static_cast<std::uint8_t>(member.to_uint()));
        fiber_cached_[z] = true;
    }
    return fiber_cache_[z];
}

std::vector<std::uint8_t> FullMitmAdversary::settings_candidates(
    std::size_t chunk_index, std::uint8_t alice_byte, std::uint8_t eve_byte) {
    (void)chunk_index;
    switch (strategy_.search_mode) {
        case MitmSearchMode::full_list:
            return fiber_bytes(alice_byte);
        case MitmSearchMode::ball_search: {
            std::vector<std::uint8_t> out;
            for (std::uint8_t v : fiber_bytes(alice_byte)) {
                const unsigned diff = static_cast<unsigned>(v ^ eve_byte);
                if (static_cast<std::size_t>(std::popcount(diff)) <= strategy_.max_radius)
                    out.push_back(v);
            }
            return out;
        }
        case MitmSearchMode::list: {
            std::optional<CollisionList>& cached = chunk_lists_[eve_byte];
            if (!cached)
                cached = build_list(config_.scheme.f, config_.scheme.space,
                                    byte_bits(eve_byte), strategy_.list_size,
                                    strategy_.seed);
            const BitString za = eval_public_hash(
                config_.scheme.f, config_.scheme.space.r_bits, byte_bits(alice_byte));
            const std::optional<BitString> hit = cached->lookup(za);
            if (!hit) return {};
            return {static_cast<std::uint8_t>(hit->to_uint())};
        }
    }
    throw contract_error("unreachable mitm search mode");
}

ChannelAdversary::QuantumDelivery FullMitmAdversary::on_quantum(
    const BitString& alice_bits, const BitString& alice_bases,
    const BitString& bob_bases, Rng& rng) {
    bob_bases_ = bob_bases;
    const InterceptResult res =
        intercept_resend_with_bases(alice_bases, alice_bits, eve_bases_, rng);
    eve_bits_ = res.eve_bits;
    // Alice receives the substituted basis record, so her sifted key is the
    // subset where her bases agree with the interception bases -- known here.
    a_sift_ = sift(alice_bases, eve_bases_, alice_bits);
    QuantumDelivery out;
    out.bits = res.resent_bits;
    out.bases = res.resent_bases;
    out.record_to_alice = eve_bases_;
    return out;
}

void FullMitmAdversary::log_forgery(PhaseId phase,
                                    const std::vector<std::uint8_t>& original,
                                    const std::vector<std::uint8_t>& forged,
                                    const std::optional<BitString>& tag,
                                    bool reused) {
    ForgeryRecord rec;
    rec.phase = phase;
    rec.original = original;
    rec.forged = forged;
    rec.bit_distance = wire_bit_distance(original, forged);
    if (tag) rec.tag = *tag;
    rec.tag_reused = reused;
    log_.push_back(std::move(rec));
}

std::optional<std::vector<std::uint8_t>> FullMitmAdversary::forge_settings(
    const std::vector<std::uint8_t>& wire) {
    const std::size_t nq = config_.num_qubits;
    const std::size_t chunks = nq / 8;
    if (wire.size() != 5 + chunks) return std::nullopt;
    const std::size_t len_a = a_sift_.size();
    if (len_a == 0) return std::nullopt;
    const std::size_t b = config_.ec_block_bits;
    const std::size_t blocks_a = ec_num_blocks(len_a, b);
    const std::size_t window_lo = b * (blocks_a - 1) + 1;
    const std::size_t window_hi = std::min(nq, b * blocks_a);
    const std::size_t budget = static_cast<std::size_t>(
        config_.qber_abort_threshold * static_cast<double>(len_a));

    // Candidate substitutions per payload chunk, each scored by how many
    // receiver-side positions it keeps, how many kept positions have an
    // unknown outcome (basis disagrees with the interception basis), and how
    // far it sits from the interception bases.
    struct Cand {
        std::uint8_t value;
        std::uint32_t keep, susp, dist;
    };
    std::vector<std::vector<Cand>> cands(chunks);
    for (std::size_t j = 0; j < chunks; ++j) {
        const std::uint8_t alice_byte = wire[5 + j];
        const std::uint8_t eve_byte =
            static_cast<std::uint8_t>(eve_bases_.slice(8 * j, 8).to_uint());
        const std::uint8_t bob_byte =
            static_cast<std::uint8_t>(bob_bases_.slice(8 * j, 8).to_uint());
        const std::vector<std::uint8_t> values =
            settings_candidates(j, alice_byte, eve_byte);
        if (values.empty()) {
            search_exhausted_ = true;
            return std::nullopt;
        }
        for (std::uint8_t v : values) {
            const unsigned agree = ~static_cast<unsigned>(v ^ bob_byte) & 0xffu;
            Cand c;
            c.value = v;
            c.keep = static_cast<std::uint32_t>(std::popcount(agree));
            c.susp = static_cast<std::uint32_t>(
                std::popcount(agree & static_cast<unsigned>(bob_byte ^ eve_byte)));
            c.dist = static_cast<std::uint32_t>(
                std::popcount(static_cast<unsigned>(v ^ eve_byte)));
            cands[j].push_back(c);
        }
    }

    // Chunk-wise optimisation over the total number of kept positions:
    // cost (total unknown-outcome positions, total distance), lexicographic.
    constexpr std::uint64_t kInvalid = std::numeric_limits<std::uint64_t>::max();
    const auto pack = [](std::uint32_t susp, std::uint32_t dist) {
        return (static_cast<std::uint64_t>(susp) << 32) | dist;
    };
    std::vector<std::vector<std::uint64_t>> dp(
        chunks + 1, std::vector<std::uint64_t>(nq + 1, kInvalid));
    std::vector<std::vector<std::uint16_t>> parent(
        chunks, std::vector<std::uint16_t>(nq + 1, 0));
    dp[0][0] = 0;
    for (std::size_t j = 0; j < chunks; ++j) {
        for (std::size_t s = 0; s <= nq; ++s) {
            const std::uint64_t cost = dp[j][s];
            if (cost == kInvalid) continue;
            const std::uint32_t susp = static_cast<std::uint32_t>(cost >> 32);
            const std::uint32_t dist = static_cast<std::uint32_t>(cost & 0xffffffffu);
            for (std::size_t ci = 0; ci < cands[j].size(); ++ci) {
                const Cand& c = cands[j][ci];
                const std::size_t s2 = s + c.keep;
                const std::uint64_t cost2 = pack(susp + c.susp, dist + c.dist);
                if (cost2 < dp[j + 1][s2]) {
                    dp[j + 1][s2] = cost2;
                    parent[j][s2] = static_cast<std::uint16_t>(ci + 1);
                }
            }
        }
    }

    // Pick a kept total in the same block-count window as the sender-side
    // key, preferring few unknown positions, then totals whose trailing
    // reconciliation block is wide enough for every syndrome value to decode
    // (narrow tails cannot express all receiver-side outcomes), then equal
    // lengths, then small distance from the interception bases.
    const std::size_t eb = config_.ec_block_bits;
    const std::size_t erows = ec_syndrome_rows(eb);
    const auto tail_pen = [&](std::size_t t) -> std::uint64_t {
        const std::size_t w = t - eb * ((t + eb - 1) / eb - 1);
        return (1 + w + w * (w - 1) / 2) < (std::size_t{1} << erows) ? 1 : 0;
    };
    std::optional<std::size_t> best_t;
    std::uint64_t best_susp = 0, best_pen = 0, best_gap = 0, best_dist = 0;
    for (std::size_t t = window_lo; t <= window_hi; ++t) {
        const std::uint64_t cost = dp[chunks][t];
        if (cost == kInvalid) continue;
        const std::uint64_t susp = cost >> 32;
        // Unknown positions beyond two per full reconciliation block cannot
        // all be branch-consistent, and a narrow tail only holds as many as
        // it has bits, so totals past that capacity are unwinnable; the
        // error-estimate budget itself is recoverable later by shrinking the
        // receiver's reported correction count inside its digest fiber.
        const std::size_t blocks_t = (t + eb - 1) / eb;
        const std::size_t tw = t - eb * (blocks_t - 1);
        const std::uint64_t tail_cap =
            (1 + tw + tw * (tw - 1) / 2) >= (std::size_t{1} << erows)
                ? 2
                : std::min<std::size_t>(4, tw);
        const std::uint64_t cap = 2 * (blocks_t - 1) + tail_cap;
        if (susp > std::min<std::uint64_t>(cap, 2 * budget + 8)) continue;
        const std::uint64_t pen = tail_pen(t);
        const std::uint64_t gap = t > len_a ? t - len_a : len_a - t;
        const std::uint64_t dist = cost & 0xffffffffu;
        const auto key = std::array<std::uint64_t, 4>{susp, pen, gap, dist};
        if (!best_t ||
            key < std::array<std::uint64_t, 4>{best_susp, best_pen, best_gap,
                                               best_dist}) {
            best_t = t;
            best_susp = susp;
            best_pen = pen;
            best_gap = gap;
            best_dist = dist;
        }
    }
    if (!best_t) return std::nullopt;

    std::vector<std::uint8_t> chosen(chunks);
    std::size_t state = *best_t;
    for (std::size_t j = chunks; j-- > 0;) {
        const std::uint16_t pi = parent[j][state];
        if (pi == 0) throw contract_error("mitm: broken substitution trace");
        const Cand& c = cands[j][pi - 1];
        chosen[j] = c.value;
        state -= c.keep;
    }
    if (state != 0) throw contract_error("mitm: broken substitution trace");

    std::vector<std::uint8_t> forged = wire;
    for (std::size_t j = 0; j < chunks; ++j) forged[5 + j] = chosen[j];
    assert_chunk_collisions(config_.scheme, wire, forged);

    claimed_ = BitString::from_bytes(chosen, nq);
    std::string guess;
    b_suspect_.clear();
    for (std::size_t i = 0; i < nq; ++i) {
        if (claimed_.bit(i) != bob_bases_.bit(i)) continue;
        guess += eve_bits_.bit(i) ? '1' : '0';
        b_suspect_.push_back(bob_bases_.bit(i) != eve_bases_.bit(i));
    }
    b_guess_ = BitString::from_string(guess);
    tracking_ = true;
    return forged;
}

std::optional<std::vector<std::uint8_t>> FullMitmAdversary::forge_ec(
    const std::vector<std::uint8_t>& wire) {
    const PhaseMessage msg = decode(wire);
    if (msg.phase() != PhaseId::ec_maps) return std::nullopt;
    const EcMapsMsg& maps = std::get<EcMapsMsg>(msg.body);
    const std::size_t b = config_.ec_block_bits;
    const std::size_t rows = ec_syndrome_rows(b);
    const std::size_t len_a = a_sift_.size();
    const std::size_t len_b = b_guess_.size();
    const std::size_t blocks_a = ec_num_blocks(len_a, b);
    const std::size_t blocks_b = ec_num_blocks(len_b, b);
    if (blocks_b != blocks_a || blocks_b == 0) return std::nullopt;
    if (maps.syndromes.size() != blocks_a * rows) return std::nullopt;

    a_perm_ = ec_permute(a_sift_, maps.perm_seed);

    const std::size_t budget = static_cast<std::size_t>(
        config_.qber_abort_threshold * static_cast<double>(len_a));
    const std::size_t bpb = 8 / rows;  // reconciliation blocks per wire byte
    const std::size_t n_bytes = (blocks_b * rows + 7) / 8;
    const std::size_t syn_offset = 13;
    if (wire.size() != syn_offset + n_bytes) return std::nullopt;

    // Candidate seeds: the sender's own seed first, then combinations of
    // digest-fiber substitutes for its four wire bytes, generated lazily so
    // that large fibers expose millions of candidates without storing them.
    const auto seed_fibers = [&](std::size_t offset) {
        std::array<std::vector<std::uint8_t>, 4> out;
        for (std::size_t i = 0; i < 4; ++i) out[i] = fiber_bytes(wire[offset + i]);
        return out;
    };
    const std::array<std::vector<std::uint8_t>, 4> perm_fibers = seed_fibers(1);
    const std::array<std::vector<std::uint8_t>, 4> mat_fibers = seed_fibers(5);
    struct SeedStream {
        const std::array<std::vector<std::uint8_t>, 4>& fibers;
        std::uint32_t verbatim;
        bool emitted = false;
        bool exhausted = false;
        std::array<std::size_t, 4> idx{0, 0, 0, 0};

        std::optional<std::uint32_t> next() {
            if (!emitted) {
                emitted = true;
                return verbatim;
            }
            while (!exhausted) {
                const std::uint32_t seed =
                    (static_cast<std::uint32_t>(fibers[0][idx[0]]) << 24) |
                    (static_cast<std::uint32_t>(fibers[1][idx[1]]) << 16) |
                    (static_cast<std::uint32_t>(fibers[2][idx[2]]) << 8) |
                    static_cast<std::uint32_t>(fibers[3][idx[3]]);
                std::size_t i = 4;
                while (i-- > 0) {
                    if (++idx[i] < fibers[i].size()) break;
                    idx[i] = 0;
                    if (i == 0) exhausted = true;
                }
                if (seed != verbatim) return seed;
            }
            return std::nullopt;
        }
    };

    // Syndrome values each block can carry after digest-preserving
    // substitution of the byte holding it; fixed before any seed is chosen.
    const std::size_t sigma_space = std::size_t{1} << rows;
    std::vector<std::vector<std::uint8_t>> byte_members(n_bytes);
    std::vector<std::vector<std::uint8_t>> achievable(
        blocks_b, std::vector<std::uint8_t>(sigma_space, 0));
    for (std::size_t j = 0; j < n_bytes; ++j) {
        const std::size_t k0 = j * bpb;
        const std::size_t k1 = std::min(blocks_b, k0 + bpb);
        const std::size_t used_bits = (k1 - k0) * rows;
        const std::uint8_t tail_mask =
            static_cast<std::uint8_t>((1u << (8 - used_bits)) - 1u);
        for (const std::uint8_t v : fiber_bytes(wire[syn_offset + j])) {
            if ((v & tail_mask) != 0) continue;  // padding must stay zero
            byte_members[j].push_back(v);
            for (std::size_t k = k0; k < k1; ++k) {
                const std::size_t shift = 8 - (k - k0 + 1) * rows;
                achievable[k][(v >> shift) & (sigma_space - 1)] = 1;
            }
        }
        if (byte_members[j].empty()) return std::nullopt;
    }

    // When every syndrome value decodes (full-width blocks of four rows or
    // fewer), a wrong correction can never surface as a failed status; each
    // status is then pinned to a single corrected value, and three or more
    // unknown receiver bits in one block can never keep all their overlay
    // branches consistent.  Narrow tails and eight-row blocks can express
    // failures, so they tolerate more unknowns at an expected-drop cost.
    std::vector<std::uint8_t> surjective(blocks_b, 0);
    for (std::size_t k = 0; k < blocks_b; ++k) {
        const std::size_t w = ec_block_width(len_b, b, k);
        surjective[k] = (1 + w + w * (w - 1) / 2 >= sigma_space) ? 1 : 0;
    }
    std::size_t hard_floor = 0;
    for (std::size_t k = 0; k < blocks_b; ++k)
        if (!surjective[k]) ++hard_floor;

    std::vector<std::uint8_t> susp_mask(len_b, 0);
    for (std::size_t i = 0; i < len_b; ++i) susp_mask[i] = b_suspect_[i] ? 1 : 0;

    // Block corrections fit in a mask over block positions, so candidate
    // plans are tracked as packed words and expanded only on commit.
    struct PlanEntryMask {
        bool dropped = false;
        std::uint32_t final_mask = 0;
    };
    struct PlanMasks {
        std::array<std::optional<PlanEntryMask>, 3> by_status{};
        std::size_t worst_flips = 0;
    };

    struct Feasible {
        std::uint32_t perm_seed = 0;
        std::uint32_t mat_seed = 0;
        std::vector<std::uint8_t> bytes;
        std::vector<PlanMasks> plans;
        std::size_t full_dropw = 0;   // drop mass over full-width blocks
        std::size_t drop_weight = 0;  // total drop mass
        std::size_t worst = 0;
        std::size_t over = 0;  // worst case exceeds the error-estimate budget
    };
    constexpr std::size_t kPermScreenCap = 32768;
    constexpr std::size_t kFallbackKeep = 4096;
    constexpr std::size_t kTier0Attempts = 12;
    constexpr std::size_t kTierBAttempts = 24;
    constexpr std::size_t kMatScreenCap = 16384;
    constexpr std::size_t kViableMatsPerPerm = 10;
    constexpr std::size_t kMatCacheCap = kMatScreenCap;
    constexpr std::size_t kFeasibleScan = 8;
    std::optional<Feasible> best_found;
    std::size_t feasible_seen = 0;
    bool stop = false;

    // Matrices and decode tables depend only on the matrix seed, which the
    // candidate stream yields in a fixed order, so cache them by stream
    // position across permutation attempts.  Table entries pack the status
    // (bits 24-25), a drop flag (bit 31) and the correction mask (low bits).
    struct MatEntry {
        std::vector<std::optional<EcBlockMatrix>> mat;
        std::vector<std::vector<std::uint32_t>> table;
    };
    std::vector<MatEntry> mat_cache;
    MatEntry overflow_entry;
    const auto ensure_block = [&](MatEntry& me, std::uint32_t mat_seed,
                                  std::size_t k) {
        if (me.mat.empty()) {
            me.mat.assign(blocks_b, std::nullopt);
            me.table.assign(blocks_b, {});
        }
        if (me.mat[k]) return;
        const std::size_t w = ec_block_width(len_b, b, k);
        me.mat[k] = ec_block_matrix(mat_seed, k, w, rows);
        // Fill the table in the decoder's preference order (weight one in
        // position order, then pairs lexicographically); the first writer of
        // a syndrome difference wins, everything left over is a failure.
        std::vector<std::uint32_t>& tb = me.table[k];
        tb.assign(sigma_space, (2u << 24) | 0x80000000u);
        const std::vector<std::uint32_t>& cols = me.mat[k]->columns;
        constexpr std::uint32_t kUnset = (2u << 24) | 0x80000000u;
        tb[0] = 0;  // matched, no correction
        for (std::size_t i = 0; i < w; ++i)
            if (tb[cols[i]] == kUnset)
                tb[cols[i]] = (1u << 24) | (1u << i);
        for (std::size_t i = 0; i + 1 < w; ++i)
            for (std::size_t j = i + 1; j < w; ++j) {
                const std::uint32_t d = cols[i] ^ cols[j];
                if (d != 0 && tb[d] == kUnset)
                    tb[d] = (1u << 24) | (1u << i) | (1u << j);
            }
    };

    std::size_t susp_total = 0;
    for (std::size_t i = 0; i < len_b; ++i) susp_total += b_suspect_[i] ? 1 : 0;
    // Where the unknown receiver bits land decides feasibility: surjective
    // blocks reject three or more of them outright, and every block whose
    // viability depends on the matrix choice narrows the matrix search.
    // Rank permutation candidates by how many such blocks they create.
    struct Layout {
        bool ok = false;
        std::size_t hard = 0;  // blocks whose viability depends on the matrix
        std::vector<std::uint8_t> s_of;
        std::vector<std::array<std::uint16_t, kMaxBlockSuspects>> pos;
    };
    const auto screen_layout = [&](std::uint32_t perm_seed) {
        Layout lo;
        lo.s_of.assign(blocks_b, 0);
        lo.pos.assign(blocks_b, {});
        Rng prng(perm_seed);
        const std::vector<std::size_t> perm = rng_permutation(prng, len_b);
        for (std::size_t i = 0; i < len_b; ++i) {
            if (!susp_mask[perm[i]]) continue;
            const std::size_t k = i / b;
            const std::size_t cap = surjective[k] ? 2 : kMaxBlockSuspects;
            if (lo.s_of[k] == cap) return lo;  // ok stays false
            lo.pos[k][lo.s_of[k]++] = static_cast<std::uint16_t>(i % b);
        }
        for (std::size_t k = 0; k < blocks_b; ++k) {
            if (surjective[k])
                lo.hard += lo.s_of[k] >= 2 ? 1 : 0;
            else
                lo.hard += 1 + lo.s_of[k];
        }
        lo.ok = true;
        return lo;
    };

    const auto attempt_perm = [&](std::uint32_t perm_seed, const Layout& lo) {
        const BitString pg = ec_permute(b_guess_, perm_seed);
        std::vector<std::uint32_t> y0_mask(blocks_b, 0);
        for (std::size_t k = 0; k < blocks_b; ++k) {
            const std::size_t w = ec_block_width(len_b, b, k);
            for (std::size_t p = 0; p < w; ++p)
                if (pg.bit(k * b + p)) y0_mask[k] |= 1u << p;
        }
        // Blocks whose viability depends on the matrix, most constrained
        // first so unusable matrices are rejected after one check.
        std::vector<std::size_t> screened;
        for (std::size_t k = 0; k < blocks_b; ++k)
            if (!surjective[k] || lo.s_of[k] >= 2) screened.push_back(k);
        std::stable_sort(screened.begin(), screened.end(),
                         [&](std::size_t x, std::size_t y) {
                             return lo.s_of[x] > lo.s_of[y];
                         });

        // Evaluate one block under one syndrome value: every overlay branch
        // must land on a status whose outcome is branch-independent.
        const auto block_plan = [&](MatEntry& me, std::size_t k,
                                    std::uint32_t sigma, PlanMasks& plan,
                                    std::size_t& drop_branches) -> bool {
            const EcBlockMatrix& mat = *me.mat[k];
            const std::vector<std::uint32_t>& tb = me.table[k];
            const std::size_t s = lo.s_of[k];
            std::uint32_t syn0 = 0;
            for (std::uint32_t m = y0_mask[k]; m != 0; m &= m - 1)
                syn0 ^= mat.columns[std::countr_zero(m)];
            std::array<std::optional<PlanEntryMask>, 3> by{};
            std::size_t worst = 0;
            std::size_t drops = 0;
            for (std::uint32_t br = 0; br < (1u << s); ++br) {
                std::uint32_t overlay = 0;
                std::uint32_t syn = syn0;
                for (std::size_t t = 0; t < s; ++t)
                    if (br & (1u << t)) {
                        overlay |= 1u << lo.pos[k][t];
                        syn ^= mat.columns[lo.pos[k][t]];
                    }
                const std::uint32_t e = tb[(syn ^ sigma) & (sigma_space - 1)];
                PlanEntryMask pe;
                if (e & 0x80000000u) {
                    pe.dropped = true;
                    ++drops;
                } else {
                    pe.final_mask = y0_mask[k] ^ overlay ^ (e & 0xffffu);
                    worst = std::max(
                        worst, static_cast<std::size_t>(
                                   std::popcount(e & 0xffffu)));
                }
                std::optional<PlanEntryMask>& slot = by[(e >> 24) & 3u];
                if (slot) {
                    if (slot->dropped != pe.dropped ||
                        slot->final_mask != pe.final_mask)
                        return false;  // status would be ambiguous
                } else {
                    slot = pe;
                }
            }
            plan.by_status = by;
            plan.worst_flips = worst;
            drop_branches = drops;
            return true;
        };

        SeedStream mats{mat_fibers, maps.matrix_seed};
        std::size_t viable_used = 0;
        // Each matrix-dependent block beyond the floor thins the viable
        // matrices roughly fourfold, so scale the screen depth to match.
        const std::size_t excess = lo.hard - hard_floor;
        const std::size_t mat_budget =
            excess >= 4 ? kMatScreenCap
                        : std::min(kMatScreenCap,
                                   std::size_t{96} << (2 * excess));
        for (std::size_t mi = 0;
             !stop && viable_used < kViableMatsPerPerm && mi < mat_budget;
             ++mi) {
            const std::optional<std::uint32_t> ms = mats.next();
            if (!ms) break;
            MatEntry* me;
            if (mi < kMatCacheCap) {
                if (mat_cache.size() <= mi) mat_cache.emplace_back();
                me = &mat_cache[mi];
            } else {
                overflow_entry = MatEntry{};
                me = &overflow_entry;
            }
            bool viable = true;
            for (const std::size_t k : screened) {
                ensure_block(*me, *ms, k);
                bool any = false;
                PlanMasks scratch;
                std::size_t dropb = 0;
                for (std::uint32_t sg = 0;
                     sg < sigma_space && !any; ++sg)
                    if (achievable[k][sg])
                        any = block_plan(*me, k, sg, scratch, dropb);
                if (!any) {
                    viable = false;
                    break;
                }
            }
            if (!viable) continue;
            ++viable_used;

            std::vector<std::uint8_t> chosen_bytes(n_bytes);
            std::vector<PlanMasks> plans(blocks_b);
            std::size_t total_worst = 0, total_dropw = 0, total_fdropw = 0;
            bool candidate_ok = true;
            for (std::size_t j = 0; j < n_bytes && candidate_ok; ++j) {
                const std::size_t k0 = j * bpb;
                const std::size_t k1 = std::min(blocks_b, k0 + bpb);
                std::optional<std::uint8_t> best_value;
                std::size_t best_flips = 0, best_dropw = 0, best_fdropw = 0;
                std::vector<PlanMasks> best_plans;
                for (const std::uint8_t v : byte_members[j]) {
                    std::vector<PlanMasks> member_plans(k1 - k0);
                    std::size_t member_flips = 0;
                    std::size_t member_dropw = 0, member_fdropw = 0;
                    bool member_ok = true;
                    for (std::size_t k = k0; k < k1; ++k) {
                        ensure_block(*me, *ms, k);
                        const std::size_t shift = 8 - (k - k0 + 1) * rows;
                        const std::uint32_t sigma =
                            (static_cast<std::uint32_t>(v) >> shift) &
                            (static_cast<std::uint32_t>(sigma_space) - 1u);
                        std::size_t dropb = 0;
                        PlanMasks& plan = member_plans[k - k0];
                        if (!block_plan(*me, k, sigma, plan, dropb)) {
                            member_ok = false;
                            break;
                        }
                        member_flips += plan.worst_flips;
                        // Weight dropping branches by probability mass so a
                        // plan that can waste a block ranks below one that
                        // cannot (denominator 2^kMaxBlockSuspects); full
                        // blocks cost more key bits than a narrow tail.
                        const std::size_t mass =
                            dropb << (kMaxBlockSuspects - lo.s_of[k]);
                        member_dropw += mass;
                        if (ec_block_width(len_b, b, k) == b)
                            member_fdropw += mass;
                    }
                    if (!member_ok) continue;
                    const auto mk = std::array<std::size_t, 3>{
                        member_fdropw, member_dropw, member_flips};
                    if (!best_value ||
                        mk < std::array<std::size_t, 3>{best_fdropw,
                                                        best_dropw,
                                                        best_flips}) {
                        best_value = v;
                        best_flips = member_flips;
                        best_dropw = member_dropw;
                        best_fdropw = member_fdropw;
                        best_plans = std::move(member_plans);
                    }
                }
                if (!best_value) {
                    candidate_ok = false;
                    break;
                }
                chosen_bytes[j] = *best_value;
                total_worst += best_flips;
                total_dropw += best_dropw;
                total_fdropw += best_fdropw;
                for (std::size_t k = k0; k < k1; ++k)
                    plans[k] = std::move(best_plans[k - k0]);
            }
            // A worst case beyond the sender's error-estimate budget is
            // still playable (the reported correction count can be shrunk
            // within its digest fiber), just dispreferred; far beyond it,
            // that shrink has nothing plausible to shrink to.
            if (!candidate_ok || total_worst > 2 * budget + 8) continue;

            ++feasible_seen;
            const std::size_t over = total_worst > budget ? 1 : 0;
            const auto fk = std::array<std::size_t, 4>{
                over, total_fdropw, total_dropw, total_worst};
            if (!best_found ||
                fk < std::array<std::size_t, 4>{best_found->over,
                                                best_found->full_dropw,
                                                best_found->drop_weight,
                                                best_found->worst}) {
                best_found =
                    Feasible{perm_seed,  *ms,         std::move(chosen_bytes),
                             std::move(plans), total_fdropw, total_dropw,
                             total_worst, over};
            }
            if ((best_found->full_dropw == 0 && best_found->over == 0) ||
                feasible_seen >= kFeasibleScan) {
                stop = true;
                return;
            }
        }
    };

    // Pass 1: stream permutation candidates; attempt floor-difficulty
    // layouts as they appear and bank the rest, ranked, for pass 2.  Heavy
    // trials (many unknown receiver bits) get a much deeper scan: workable
    // layouts are rarer and more matrix luck is needed per layout.
    const bool heavy = susp_total >= 14;
    const std::size_t perm_cap = heavy ? 262144 : kPermScreenCap;
    const std::size_t fb_keep = heavy ? 65536 : kFallbackKeep;
    const std::size_t tierb_cap = heavy ? 96 : kTierBAttempts;
    const std::size_t exit_scan = heavy ? 131072 : 8192;
    const std::size_t exit_near = heavy ? 512 : 48;
    SeedStream perms{perm_fibers, maps.perm_seed};
    std::vector<std::pair<std::size_t, std::uint32_t>> fallback;
    std::size_t tier0_attempts = 0;
    std::size_t min_hard = std::numeric_limits<std::size_t>::max();
    std::size_t near_min = 0;
    for (std::size_t scanned = 0; !stop && scanned < perm_cap; ++scanned) {
        const std::optional<std::uint32_t> ps = perms.next();
        if (!ps) break;
        const Layout lo = screen_layout(*ps);
        if (!lo.ok) {
            continue;
        }
        if (lo.hard == hard_floor && tier0_attempts < kTier0Attempts) {
            ++tier0_attempts;
            attempt_perm(*ps, lo);
            continue;
        }
        if (fallback.size() < fb_keep)
            fallback.emplace_back(lo.hard, *ps);
        if (lo.hard < min_hard) {
            min_hard = lo.hard;
            near_min = 0;
        }
        if (lo.hard <= min_hard + 1) ++near_min;
        // With a healthy pool near the best difficulty seen, deeper scanning
        // rarely improves on what pass 2 already has to work with.
        if (scanned >= exit_scan && near_min >= exit_near) break;
    }
    if (!stop) {
        std::stable_sort(fallback.begin(), fallback.end(),
                         [](const auto& x, const auto& y) {
                             return x.first < y.first;
                         });
        std::size_t tried_fb = 0;
        for (const auto& [hard, perm_seed] : fallback) {
            if (stop || tried_fb >= tierb_cap) break;
            (void)hard;
            attempt_perm(perm_seed, screen_layout(perm_seed));
            ++tried_fb;
        }
    }
    if (!best_found) return std::nullopt;

    std::vector<std::uint8_t> forged = wire;
    forged[1] = static_cast<std::uint8_t>(best_found->perm_seed >> 24);
    forged[2] = static_cast<std::uint8_t>(best_found->perm_seed >> 16);
    forged[3] = static_cast<std::uint8_t>(best_found->perm_seed >> 8);
    forged[4] = static_cast<std::uint8_t>(best_found->perm_seed);
    forged[5] = static_cast<std::uint8_t>(best_found->mat_seed >> 24);
    forged[6] = static_cast<std::uint8_t>(best_found->mat_seed >> 16);
    forged[7] = static_cast<std::uint8_t>(best_found->mat_seed >> 8);
    forged[8] = static_cast<std::uint8_t>(best_found->mat_seed);
    for (std::size_t j = 0; j < n_bytes; ++j)
        forged[syn_offset + j] = best_found->bytes[j];
    assert_chunk_collisions(config_.scheme, wire, forged);

    std::vector<BlockPlan> final_plans(blocks_b);
    for (std::size_t k = 0; k < blocks_b; ++k) {
        const std::size_t w = ec_block_width(len_b, b, k);
        BlockPlan& fp = final_plans[k];
        fp.worst_flips = best_found->plans[k].worst_flips;
        for (std::size_t si = 0; si < 3; ++si) {
            const std::optional<PlanEntryMask>& pe =
                best_found->plans[k].by_status[si];
            if (!pe) continue;
            BlockPlan::Entry entry;
            if (pe->dropped) {
                entry.dropped = true;
            } else {
                BitString f(w);
                for (std::size_t p = 0; p < w; ++p)
                    f.set_bit(p, (pe->final_mask >> p) & 1u);
                entry.final = std::move(f);
            }
            fp.by_status[si] = std::move(entry);
        }
    }
    plans_ = std::move(final_plans);
    std::fprintf(stderr,
                 "DBG forge_ec ok susp=%zu screens=%zu layout=%zu mats=%zu "
                 "tried=%zu feasible=%zu fdropw=%zu dropw=%zu worst=%zu\n",
                 dbg_susp, dbg_screens, dbg_layout, dbg_mat_screens, dbg_tried,
                 feasible_seen, best_found->full_dropw,
                 best_found->drop_weight, best_found->worst);  // DBG
    return forged;
}

void FullMitmAdversary::absorb_confirm(const std::vector<std::uint8_t>& wire) {
    if (!tracking_) return;
    PhaseMessage msg{TimestampMsg{}};
    try {
        msg = decode(wire);
    } catch (const parse_error&) {
        tracking_ = false;
        return;
    }
    if (msg.phase() != PhaseId::ec_confirm) {
        tracking_ = false;
        return;
    }
    const EcConfirmMsg& confirm = std::get<EcConfirmMsg>(msg.body);
    bool valid = false;
    const std::vector<BlockStatus> statuses =
        ec_statuses_from_bits(confirm.block_status, &valid);
    if (!valid || statuses.size() != plans_.size()) {
        tracking_ = false;
        return;
    }
    BitString rec;
    for (std::size_t k = 0; k < statuses.size(); ++k) {
        const auto& entry = plans_[k].by_status[static_cast<std::size_t>(statuses[k])];
        if (!entry) {  // the receiver left the forecast branch space
            tracking_ = false;
            return;
        }
        if (!entry->dropped) rec.append(entry->final);
    }
    b_rec_ = std::move(rec);
    a_rec_ = ec_apply_statuses(a_perm_, config_.ec_block_bits, statuses);
    reconciled_ready_ = true;
}

ChannelAdversary::DeliveredMessage FullMitmAdversary::handle_confirm(
    const std::vector<std::uint8_t>& wire, const std::optional<BitString>& tag) {
    absorb_confirm(wire);
    if (!tracking_ || !reconciled_ready_ || wire.size() < 9)
        return {wire, tag};
    // The reported correction count feeds only the sender's error-rate
    // estimate.  When heavy corrections would trip the abort threshold,
    // shrink the count's low byte to a smaller member of its digest fiber;
    // the tag still verifies and nothing else consumes the value.
    const std::size_t budget = static_cast<std::size_t>(
        config_.qber_abort_threshold * static_cast<double>(a_sift_.size()));
    std::uint32_t reported = 0;
    for (std::size_t i = wire.size() - 4; i < wire.size(); ++i)
        reported = (reported << 8) | wire[i];
    if (reported <= budget || reported > 255) return {wire, tag};
    std::optional<std::uint8_t> best;
    for (const std::uint8_t m : fiber_bytes(wire.back()))
        if (m <= budget && (!best || m > *best)) best = m;
    if (!best) return {wire, tag};
    std::vector<std::uint8_t> forged = wire;
    forged.back() = *best;
    assert_chunk_collisions(config_.scheme, wire, forged);
    attempted_[static_cast<std::size_t>(PhaseId::ec_confirm)] = true;
    log_forgery(PhaseId::ec_confirm, wire, forged, tag, true);
    return {std::move(forged), tag};
}

ChannelAdversary::DeliveredMessage FullMitmAdversary::handle_pa(
    const std::vector<std::uint8_t>& wire, const std::optional<BitString>& tag) {
    if (!tracking_ || !reconciled_ready_) return {wire, tag};
    const PhaseMessage msg = decode(wire);
    const PaMapMsg& pa = std::get<PaMapMsg>(msg.body);
    const PaForgeResult result =
        forge_pa_for_length(config_.scheme, wire, b_rec_.size());
    if (result.gave_up) {
        gave_up_ = true;
        return {wire, tag};
    }
    const std::size_t out_a = pa.out_len;
    if (out_a >= 1 && out_a + a_rec_.size() - 1 <= pa.seed.size())
        key_with_alice_ =
            pa_compress(pa.seed.slice(0, out_a + a_rec_.size() - 1), a_rec_, out_a);
    const std::uint32_t out_b =
        (static_cast<std::uint32_t>(result.wire[1]) << 24) |
            (static_cast<std::uint32_t>(result.wire[2]) << 16) |
            (static_cast<std::uint32_t>(result.wire[3]) << 8) |
            static_cast<std::uint32_t>(result.wire[4]);
    key_with_bob_ =
        pa_compress(pa.seed.slice(0, out_b + b_rec_.size() - 1), b_rec_, out_b);
    if (result.wire != wire) {
        attempted_[static_cast<std::size_t>(PhaseId::pa_map)] = true;
        log_forgery(PhaseId::pa_map, wire, result.wire, tag, true);
    }
    return {result.wire, tag};
}

ChannelAdversary::DeliveredMessage FullMitmAdversary::wc_gamble(
    PhaseId phase, const std::vector<std::uint8_t>& wire,
    const std::optional<BitString>& tag) {
    if (phase == PhaseId::settings) {
        const std::size_t chunks = config_.num_qubits / 8;
        if (wire.size() != 5 + chunks) return {wire, tag};
        for (std::size_t j = 0; j < chunks; ++j) {
            const std::uint8_t eve_byte =
                static_cast<std::uint8_t>(eve_bases_.slice(8 * j, 8).to_uint());
            if (wire[5 + j] == eve_byte) continue;
            std::vector<std::uint8_t> forged = wire;
            forged[5 + j] = eve_byte;
            attempted_[static_cast<std::size_t>(phase)] = true;
            log_forgery(phase, wire, forged, tag, true);
            return {std::move(forged), tag};
        }
        return {wire, tag};
    }
    // ec_maps: flip the leading syndrome bit and reuse the tag.
    if (wire.size() <= 13) return {wire, tag};
    std::vector<std::uint8_t> forged = wire;
    forged[13] ^= 0x80;
    attempted_[static_cast<std::size_t>(phase)] = true;
    log_forgery(phase, wire, forged, tag, true);
    return {std::move(forged), tag};
}

ChannelAdversary::DeliveredMessage FullMitmAdversary::on_message(
    Direction dir, PhaseId phase, const std::vector<std::uint8_t>& wire,
    const std::optional<BitString>& tag, Rng& rng) {
    (void)dir;
    (void)rng;
    if (config_.auth_mode == AuthMode::postponed) return {wire, tag};
    if (config_.scheme.kind == SchemeKind::wegman_carter) {
        if (phase == PhaseId::settings || phase == PhaseId::ec_maps)
            return wc_gamble(phase, wire, tag);
        return {wire, tag};
    }
    switch (phase) {
        case PhaseId::settings: {
            const auto forged = forge_settings(wire);
            if (!forged) {
                gave_up_ = true;
                return {wire, tag};
            }
            if (*forged != wire) {
                attempted_[static_cast<std::size_t>(phase)] = true;
                log_forgery(phase, wire, *forged, tag, true);
            }
            return {*forged, tag};
        }
        case PhaseId::ec_maps: {
            if (!tracking_) return {wire, tag};
            const auto forged = forge_ec(wire);
            if (!forged) {
                gave_up_ = true;
                tracking_ = false;
                return {wire, tag};
            }
            if (*forged != wire) {
                attempted_[static_cast<std::size_t>(phase)] = true;
                log_forgery(phase, wire, *forged, tag, true);
            }
            return {*forged, tag};
        }
        case PhaseId::ec_confirm:
            return handle_confirm(wire, tag);
        case PhaseId::pa_map:
            return handle_pa(wire, tag);
        default:
            return {wire, tag};
    }
}

BitString FullMitmAdversary::on_terminal_tag(Direction dir, const BitString& tag,
                                             Rng& rng) {
    (void)dir;
    (void)rng;
    return tag;
}

std::optional<BitString> FullMitmAdversary::eve_key_with_alice() const {
    return key_with_alice_;
}

std::optional<BitString> FullMitmAdversary::eve_key_with_bob() const {
    return key_with_bob_;
}

std::size_t FullMitmAdversary::forgeries_attempted() const { return log_.size(); }

bool FullMitmAdversary::attempted_phase(PhaseId phase) const {
    return attempted_[static_cast<std::size_t>(phase)];
}

std::vector<std::string> FullMitmAdversary::export_forgery_lines() const {
    std::vector<std::string> out;
    out.reserve(log_.size());
    for (const ForgeryRecord& rec : log_) out.push_back(forgery_line(rec));
    return out;
}

// ---------------------------------------------------------------------------

std::unique_ptr<ChannelAdversary> make_adversary(const ProtocolConfig& config,
                                                 const AdversaryStrategy& strategy) {
    strategy.validate(config.scheme.space);
    switch (strategy.kind) {
        case AdversaryKind::absent:
            return nullptr;
        case AdversaryKind::guess_tag:
        case AdversaryKind::fixed_message:
        case AdversaryKind::ball_search:
        case AdversaryKind::list:
            return std::make_unique<SettingsChunkAdversary>(config, strategy);
        case AdversaryKind::full_mitm:
            return std::make_unique<FullMitmAdversary>(config, strategy);
    }
    throw contract_error("unreachable adversary kind");
}

}  // namespace qkdsim
