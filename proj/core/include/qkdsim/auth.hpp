#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "qkdsim/bitstring.hpp"
#include "qkdsim/public_hash.hpp"
#include "qkdsim/su2.hpp"

namespace qkdsim {

enum class SchemeKind {
    two_step,       // tag = su2(f(chunk)): public r-bit compression, secret r->n hash
    wegman_carter,  // tag = su2(chunk): secret m->n hash, no public stage
};

// Per-chunk message authentication scheme.  Messages longer than m_bits are
// split into ceil(len/m) zero-padded chunks, each tagged with fresh key.
struct AuthScheme {
    SchemeKind kind = SchemeKind::two_step;
    SpaceParams space;
    PublicHashDescriptor f;  // two_step only

    void validate() const;
    // Secret bits drawn per chunk tag:
    //   two_step:       (n + r - 1) + n
    //   wegman_carter:  (n + m - 1) + n
    std::size_t key_cost_per_tag() const;
    std::size_t chunks_for_bits(std::size_t encoded_bits) const;
    std::size_t key_cost_for_bits(std::size_t encoded_bits) const;
};

// Deterministic pre-shared one-time key stream.  Both ends of a session build
// a pool from the same seed and stay synchronized by drawing the same amounts
// in the same order.  Draws past the capacity throw; the stream never wraps.
class KeyPool {
  public:
    KeyPool(std::uint64_t seed, std::size_t capacity_bits);

    BitString draw(std::size_t count);
    std::size_t consumed() const { return consumed_; }
    std::size_t remaining() const { return capacity_ - consumed_; }
    std::size_t capacity() const { return capacity_; }

  private:
    Rng rng_;
    std::size_t capacity_;
    std::size_t consumed_ = 0;
};

struct AuthenticatedMessage {
    BitString msg;  // exactly m_bits
    BitString tag;  // exactly n_bits
};

// Single-chunk primitives (msg must be exactly m_bits long).
AuthenticatedMessage make_tag(const AuthScheme& scheme, KeyPool& pool, const BitString& msg);
bool verify_tag(const AuthScheme& scheme, KeyPool& pool, const AuthenticatedMessage& am);

// Whole-encoding helpers: pad to a multiple of m_bits, tag every chunk, and
// concatenate the n-bit chunk tags.
BitString tag_encoding(const AuthScheme& scheme, KeyPool& pool,
                       const std::vector<std::uint8_t>& encoded);
bool verify_encoding(const AuthScheme& scheme, KeyPool& pool,
                     const std::vector<std::uint8_t>& encoded, const BitString& tag);

// Tag-substitution models for the analytic deception bound.
struct FixedMessageModel {
    BitString m_e;  // attacker's preferred m_bits-long message
};
struct ListModel {
    std::size_t size = 0;  // precomputed digests covered
};
using EveModel = std::variant<FixedMessageModel, ListModel>;

struct AnalyticBounds {
    double eps1 = 0.0;  // substitution via public-hash collision
    double eps2 = 0.0;  // residual secret-hash guessing, 2^-n
    double eps = 0.0;   // min(1, eps1 + eps2)
};

// eps1 for two_step is the exact collision probability of the model (counted
// through the public-hash preimage scan for fixed messages, or size * 2^-r
// for a digest list); wegman_carter has no public stage, so eps1 = 0.
AnalyticBounds analytic_bounds(const AuthScheme& scheme, const EveModel& model,
                               bool override_guard = false);

}  // namespace qkdsim
