#include "qkdsim/auth.hpp"

#include <cmath>

#include "qkdsim/errors.hpp"

namespace qkdsim {

void AuthScheme::validate() const {
    space.validate();
    if (kind == SchemeKind::two_step && f.kind == PublicHashKind::crc_poly &&
        f.crc_degree() != space.r_bits) {
        throw contract_error("AuthScheme: crc polynomial degree must equal r_bits");
    }
}

std::size_t AuthScheme::key_cost_per_tag() const {
    const std::size_t n = space.n_bits;
    const std::size_t in = (kind == SchemeKind::two_step) ? space.r_bits : space.m_bits;
    return (n + in - 1) + n;
}

std::size_t AuthScheme::chunks_for_bits(std::size_t encoded_bits) const {
    return (encoded_bits + space.m_bits - 1) / space.m_bits;
}

std::size_t AuthScheme::key_cost_for_bits(std::size_t encoded_bits) const {
    return chunks_for_bits(encoded_bits) * key_cost_per_tag();
}

KeyPool::KeyPool(std::uint64_t seed, std::size_t capacity_bits)
    : rng_(seed), capacity_(capacity_bits) {}

BitString KeyPool::draw(std::size_t count) {
    if (consumed_ + count > capacity_) {
        throw key_exhausted_error("KeyPool: pool exhausted");
    }
    consumed_ += count;
    return rng_bits(rng_, count);
}

static BitString chunk_tag(const AuthScheme& scheme, KeyPool& pool, const BitString& chunk) {
    const std::size_t n = scheme.space.n_bits;
    const std::size_t in =
        (scheme.kind == SchemeKind::two_step) ? scheme.space.r_bits : scheme.space.m_bits;
    Su2Key key;
    key.a = pool.draw(n + in - 1);
    key.b = pool.draw(n);
    const BitString z = (scheme.kind == SchemeKind::two_step)
                            ? eval_public_hash(scheme.f, scheme.space.r_bits, chunk)
                            : chunk;
    return eval_su2(key, z);
}

AuthenticatedMessage make_tag(const AuthScheme& scheme, KeyPool& pool, const BitString& msg) {
    if (msg.size() != scheme.space.m_bits) {
        throw contract_error("make_tag: message length must equal m_bits");
    }
    return AuthenticatedMessage{msg, chunk_tag(scheme, pool, msg)};
}

bool verify_tag(const AuthScheme& scheme, KeyPool& pool, const AuthenticatedMessage& am) {
    if (am.msg.size() != scheme.space.m_bits) {
        throw contract_error("verify_tag: message length must equal m_bits");
    }
    if (am.tag.size() != scheme.space.n_bits) return false;
    return chunk_tag(scheme, pool, am.msg) == am.tag;
}

static std::vector<BitString> split_chunks(const AuthScheme& scheme,
                                           const std::vector<std::uint8_t>& encoded) {
    const std::size_t m = scheme.space.m_bits;
    const std::size_t bits = encoded.size() * 8;
    const std::size_t chunks = scheme.chunks_for_bits(bits);
    BitString all = BitString::from_bytes(encoded, bits);
    BitString padded = all;
    if (chunks * m > bits) padded.append(BitString(chunks * m - bits));
    std::vector<BitString> out;
    out.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) out.push_back(padded.slice(c * m, m));
    return out;
}

BitString tag_encoding(const AuthScheme& scheme, KeyPool& pool,
                       const std::vector<std::uint8_t>& encoded) {
    if (encoded.empty()) throw contract_error("tag_encoding: empty encoding");
    BitString tags;
    for (const BitString& chunk : split_chunks(scheme, encoded)) {
        tags.append(chunk_tag(scheme, pool, chunk));
    }
    return tags;
}

bool verify_encoding(const AuthScheme& scheme, KeyPool& pool,
                     const std::vector<std::uint8_t>& encoded, const BitString& tag) {
    if (encoded.empty()) throw contract_error("verify_encoding: empty encoding");
    // Always consume the pool for every expected chunk so accept and reject
    // leave the verifier's pool at the same offset as the tagger's.
    bool ok = true;
    std::vector<BitString> chunks = split_chunks(scheme, encoded);
    const std::size_t n = scheme.space.n_bits;
    if (tag.size() != chunks.size() * n) ok = false;
    for (std::size_t c = 0; c < chunks.size(); ++c) {
        const BitString expect = chunk_tag(scheme, pool, chunks[c]);
        if (ok && expect != tag.slice(c * n, n)) ok = false;
    }
    return ok;
}

AnalyticBounds analytic_bounds(const AuthScheme& scheme, const EveModel& model,
                               bool override_guard) {
    scheme.validate();
    AnalyticBounds bounds;
    bounds.eps2 = std::ldexp(1.0, -static_cast<int>(scheme.space.n_bits));
    if (scheme.kind == SchemeKind::wegman_carter) {
        bounds.eps1 = 0.0;
    } else if (const auto* fixed = std::get_if<FixedMessageModel>(&model)) {
        if (fixed->m_e.size() != scheme.space.m_bits) {
            throw contract_error("analytic_bounds: fixed message length must equal m_bits");
        }
        const BitString z = eval_public_hash(scheme.f, scheme.space.r_bits, fixed->m_e);
        const std::uint64_t fiber =
            count_preimages(scheme.f, scheme.space.r_bits, scheme.space.m_bits, z,
                            override_guard);
        bounds.eps1 = static_cast<double>(fiber) /
                      std::ldexp(1.0, static_cast<int>(scheme.space.m_bits));
    } else {
        const auto& list = std::get<ListModel>(model);
        bounds.eps1 = static_cast<double>(list.size) *
                      std::ldexp(1.0, -static_cast<int>(scheme.space.r_bits));
    }
    bounds.eps = std::min(1.0, bounds.eps1 + bounds.eps2);
    return bounds;
}

}  // namespace qkdsim
