#include "doctest.h"
#include "qkdsim/bitstring.hpp"
#include "qkdsim/errors.hpp"

using namespace qkdsim;

TEST_CASE("bitstring text form is bit 0 first") {
    const BitString s = BitString::from_string("10110");
    CHECK(s.size() == 5);
    CHECK(s.bit(0) == 1);
    CHECK(s.bit(1) == 0);
    CHECK(s.bit(4) == 0);
    CHECK(s.to_string() == "10110");
    CHECK_THROWS_AS(BitString::from_string("102"), contract_error);
}

TEST_CASE("uint view keeps the most significant of len bits first") {
    CHECK(BitString::from_uint(0b1011, 4).to_string() == "1011");
    CHECK(BitString::from_uint(0x34, 8).to_string() == "00110100");
    CHECK(BitString::from_string("1011").to_uint() == 0b1011);
    CHECK(BitString::from_uint(0, 0).empty());
    CHECK_THROWS_AS(BitString::from_uint(1, 65), contract_error);
}

TEST_CASE("byte packing is MSB-first with zero padding") {
    const BitString s = BitString::from_bytes({0xa5}, 8);
    CHECK(s.to_string() == "10100101");
    CHECK(BitString::from_bytes({0xa5}, 5).to_string() == "10100");
    const BitString t = BitString::from_string("110");
    CHECK(t.to_padded_bytes() == std::vector<std::uint8_t>{0xc0});
    CHECK(t.to_hex() == "c0");
}

TEST_CASE("elementwise ops require equal lengths") {
    const BitString a = BitString::from_string("1100");
    const BitString b = BitString::from_string("1010");
    CHECK((a ^ b).to_string() == "0110");
    CHECK((a & b).to_string() == "1000");
    CHECK(a.dot(b) == 1);
    CHECK(a.hamming_distance(b) == 2);
    CHECK_THROWS_AS(a ^ BitString::from_string("11"), contract_error);
    CHECK_THROWS_AS(a.dot(BitString::from_string("1")), contract_error);
}

TEST_CASE("weight parity slice append") {
    BitString a = BitString::from_string("10110");
    CHECK(a.hamming_weight() == 3);
    CHECK(a.parity() == 1);
    CHECK(a.slice(1, 3).to_string() == "011");
    CHECK_THROWS_AS(a.slice(3, 3), contract_error);
    a.append(BitString::from_string("01"));
    CHECK(a.to_string() == "1011001");
    CHECK(BitString::concat(BitString::from_string("11"),
                            BitString::from_string("00"))
              .to_string() == "1100");
}

TEST_CASE("ordering is lexicographic with prefix first") {
    CHECK(BitString::from_string("01") < BitString::from_string("10"));
    CHECK(BitString::from_string("1") < BitString::from_string("10"));
    CHECK(BitString::from_string("10") == BitString::from_string("10"));
}

TEST_CASE("serialization round trips and rejects malformed input") {
    const BitString s = BitString::from_string("101100111");
    std::vector<std::uint8_t> out;
    s.serialize(out);
    // 32-bit big-endian count, then padded bytes.
    CHECK(out.size() == 4 + 2);
    CHECK(out[3] == 9);
    std::size_t offset = 0;
    CHECK(BitString::deserialize(out, offset) == s);
    CHECK(offset == out.size());

    std::vector<std::uint8_t> truncated(out.begin(), out.end() - 1);
    offset = 0;
    CHECK_THROWS_AS(BitString::deserialize(truncated, offset), parse_error);

    std::vector<std::uint8_t> noisy = out;
    noisy[5] |= 0x01;  // padding bit past the 9th
    offset = 0;
    CHECK_THROWS_AS(BitString::deserialize(noisy, offset), parse_error);
}

TEST_CASE("u32 helpers are big-endian") {
    std::vector<std::uint8_t> out;
    put_u32_be(out, 0x01020304u);
    CHECK(out == std::vector<std::uint8_t>{1, 2, 3, 4});
    std::size_t offset = 0;
    CHECK(get_u32_be(out, offset) == 0x01020304u);
    CHECK(offset == 4);
}
