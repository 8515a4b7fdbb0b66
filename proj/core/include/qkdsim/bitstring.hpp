#pragma once

#include <compare>
#include <cstdint>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace qkdsim {

// Fixed-length ordered sequence of bits.  Bit 0 is the first (leftmost, most
// significant) bit everywhere: in the text form "1011", in the uint view, and
// in the byte serialization.  Length is set at construction; elementwise ops
// on strings of unequal length throw instead of truncating.
class BitString {
  public:
    BitString() = default;
    explicit BitString(std::size_t len) : bits_(len, 0) {}

    // "10110" -> bits 1,0,1,1,0.  Throws on characters other than 0/1.
    static BitString from_string(std::string_view text);
    // Low `len` bits of `value`; bit 0 of the result is the most significant
    // of those `len` bits.  len <= 64.
    static BitString from_uint(std::uint64_t value, std::size_t len);
    // MSB-first unpacking of whole bytes, keeping the first bit_len bits.
    static BitString from_bytes(const std::vector<std::uint8_t>& bytes, std::size_t bit_len);

    std::size_t size() const { return bits_.size(); }
    bool empty() const { return bits_.empty(); }

    int bit(std::size_t i) const;
    void set_bit(std::size_t i, int value);
    void flip_bit(std::size_t i);

    BitString operator^(const BitString& other) const;
    BitString operator&(const BitString& other) const;
    BitString& operator^=(const BitString& other);

    int parity() const;
    std::size_t hamming_weight() const;
    std::size_t hamming_distance(const BitString& other) const;

    // Dot product over GF(2); lengths must match.
    int dot(const BitString& other) const;

    BitString slice(std::size_t pos, std::size_t len) const;
    void append(const BitString& other);
    static BitString concat(const BitString& a, const BitString& b);

    // Value of the bits read MSB-first; size() <= 64.
    std::uint64_t to_uint() const;
    std::string to_string() const;
    std::string to_hex() const;  // MSB-first, zero-padded to whole bytes

    // MSB-first packing, zero-padded to whole bytes.
    std::vector<std::uint8_t> to_padded_bytes() const;

    // Canonical wire form: 32-bit big-endian bit count, then padded bytes.
    void serialize(std::vector<std::uint8_t>& out) const;
    // Reads the canonical form starting at `offset`, advancing it.
    static BitString deserialize(const std::vector<std::uint8_t>& bytes, std::size_t& offset);

    bool operator==(const BitString& other) const = default;
    // Lexicographic: bit 0 first, 0 < 1; a proper prefix sorts first.
    std::strong_ordering operator<=>(const BitString& other) const;

  private:
    std::vector<std::uint8_t> bits_;  // one entry per bit, value 0 or 1
};

// Big-endian 32-bit integer helpers shared by the wire codec.
void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t value);
std::uint32_t get_u32_be(const std::vector<std::uint8_t>& bytes, std::size_t& offset);

}  // namespace qkdsim
