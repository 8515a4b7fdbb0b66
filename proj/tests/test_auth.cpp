#include "doctest.h"
#include "qkdsim/auth.hpp"
#include "qkdsim/errors.hpp"

using namespace qkdsim;

namespace {
AuthScheme two_step_scheme(std::size_t m, std::size_t r, std::size_t n) {
    AuthScheme s;
    s.kind = SchemeKind::two_step;
    s.space = SpaceParams{m, r, n};
    s.f = PublicHashDescriptor::make_xor_fold();
    return s;
}

AuthScheme wc_scheme(std::size_t m, std::size_t n) {
    AuthScheme s;
    s.kind = SchemeKind::wegman_carter;
    s.space = SpaceParams{m, m, n};  // r unused; keep n < r <= m valid
    s.space.r_bits = m > n + 1 ? m - 1 : n + 1;
    return s;
}
}  // namespace

TEST_CASE("per-tag key cost matches the hash shapes") {
    CHECK(two_step_scheme(8, 4, 2).key_cost_per_tag() == (2 + 4 - 1) + 2);
    CHECK(two_step_scheme(16, 6, 3).key_cost_per_tag() == (3 + 6 - 1) + 3);
    CHECK(wc_scheme(8, 2).key_cost_per_tag() == (2 + 8 - 1) + 2);
    CHECK(wc_scheme(16, 4).key_cost_per_tag() == (4 + 16 - 1) + 4);
}

TEST_CASE("chunk counting rounds up and prices whole encodings") {
    const AuthScheme s = two_step_scheme(8, 4, 2);
    CHECK(s.chunks_for_bits(0) == 0);
    CHECK(s.chunks_for_bits(1) == 1);
    CHECK(s.chunks_for_bits(8) == 1);
    CHECK(s.chunks_for_bits(9) == 2);
    CHECK(s.key_cost_for_bits(24) == 3 * s.key_cost_per_tag());
}

TEST_CASE("key pools are deterministic, synchronized, and finite") {
    KeyPool a(99, 64);
    KeyPool b(99, 64);
    CHECK(a.draw(16) == b.draw(16));
    CHECK(a.draw(48) == b.draw(48));
    CHECK(a.remaining() == 0);
    CHECK(a.consumed() == 64);
    CHECK_THROWS_AS(a.draw(1), key_exhausted_error);
    KeyPool c(100, 64);
    KeyPool d(99, 64);
    CHECK(c.draw(32) != d.draw(32));  // different seeds, different streams
}

TEST_CASE("tags verify for the genuine message and reject a tampered one") {
    for (const AuthScheme& s : {two_step_scheme(8, 4, 2), wc_scheme(8, 2)}) {
        KeyPool signer(5, 4096);
        KeyPool checker(5, 4096);
        const BitString msg = BitString::from_string("10100110");
        const AuthenticatedMessage am = make_tag(s, signer, msg);
        CHECK(am.tag.size() == s.space.n_bits);
        CHECK(verify_tag(s, checker, am));
        CHECK(signer.consumed() == checker.consumed());

        KeyPool signer2(6, 4096);
        KeyPool checker2(6, 4096);
        AuthenticatedMessage bad = make_tag(s, signer2, msg);
        bad.msg.flip_bit(7);
        // A flipped message bit changes the digest, and pool seed 6 draws a
        // key under which the stale tag misses the new digest.
        CHECK_FALSE(verify_tag(s, checker2, bad));
    }
}

TEST_CASE("two-step tags depend only on the public digest") {
    const AuthScheme s = two_step_scheme(8, 4, 2);
    // 10100110 and 01010101: digests 1100 and 0000 differ; pick a colliding
    // pair instead: xor_fold collides x with x ^ (v||v) for any 4-bit v.
    const BitString m1 = BitString::from_string("10100110");
    const BitString m2 = m1 ^ BitString::from_string("10011001");
    REQUIRE(eval_public_hash(s.f, 4, m1) == eval_public_hash(s.f, 4, m2));
    KeyPool p1(11, 4096);
    KeyPool p2(11, 4096);
    CHECK(make_tag(s, p1, m1).tag == make_tag(s, p2, m2).tag);
}

TEST_CASE("whole-encoding helpers pad, chunk, and concatenate tags") {
    const AuthScheme s = two_step_scheme(8, 4, 2);
    const std::vector<std::uint8_t> encoded{0xab, 0xcd, 0xef};
    KeyPool signer(21, 4096);
    KeyPool checker(21, 4096);
    const BitString tag = tag_encoding(s, signer, encoded);
    CHECK(tag.size() == 3 * 2);
    CHECK(verify_encoding(s, checker, encoded, tag));

    KeyPool signer2(22, 4096);
    KeyPool checker2(22, 4096);
    const BitString tag2 = tag_encoding(s, signer2, encoded);
    std::vector<std::uint8_t> altered = encoded;
    altered[1] ^= 0x40;
    CHECK_FALSE(verify_encoding(s, checker2, altered, tag2));
}

TEST_CASE("wegman-carter substitution survives with probability exactly 2^-n") {
    // m=3, n=2: enumerate the whole key family (a: 4 bits, b: 2 bits) for a
    // fixed message pair; the strongly universal family accepts the reused
    // tag on exactly |family| / 2^n keys.
    const BitString m1 = BitString::from_string("101");
    const BitString m2 = BitString::from_string("110");
    std::size_t accepted = 0, total = 0;
    for (std::uint32_t a = 0; a < 16; ++a) {
        for (std::uint32_t b = 0; b < 4; ++b) {
            const Su2Key key{BitString::from_uint(a, 4), BitString::from_uint(b, 2)};
            accepted += eval_su2(key, m1) == eval_su2(key, m2) ? 1 : 0;
            ++total;
        }
    }
    CHECK(total == 64);
    CHECK(accepted == 16);  // 2^-n = 1/4 of the family
}

TEST_CASE("analytic bounds follow the substitution model") {
    const AuthScheme ts = two_step_scheme(8, 4, 2);
    SUBCASE("digest list of size L covers L/2^r") {
        const AnalyticBounds b = analytic_bounds(ts, ListModel{4});
        CHECK(b.eps1 == doctest::Approx(4.0 / 16.0));
        CHECK(b.eps2 == doctest::Approx(0.25));
        CHECK(b.eps == doctest::Approx(0.5));
    }
    SUBCASE("full list saturates eps at one") {
        const AnalyticBounds b = analytic_bounds(ts, ListModel{16});
        CHECK(b.eps1 == doctest::Approx(1.0));
        CHECK(b.eps == doctest::Approx(1.0));
    }
    SUBCASE("fixed message counts the digest fiber") {
        const AnalyticBounds b =
            analytic_bounds(ts, FixedMessageModel{BitString::from_string("10100110")});
        CHECK(b.eps1 == doctest::Approx(16.0 / 256.0));
    }
    SUBCASE("wegman-carter leaves no public collision surface") {
        const AnalyticBounds b = analytic_bounds(wc_scheme(8, 2), ListModel{16});
        CHECK(b.eps1 == 0.0);
        CHECK(b.eps == doctest::Approx(0.25));
    }
}

TEST_CASE("scheme validation rejects broken shapes") {
    AuthScheme s = two_step_scheme(8, 4, 2);
    CHECK_NOTHROW(s.validate());
    s.space.n_bits = 4;
    CHECK_THROWS_AS(s.validate(), contract_error);
    AuthScheme crc = two_step_scheme(8, 4, 2);
    crc.f = PublicHashDescriptor::make_crc(BitString::from_string("101"));  // degree 2 != r
    CHECK_THROWS_AS(crc.validate(), contract_error);
}
