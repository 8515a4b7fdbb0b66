#include "qkdsim/bitstring.hpp"

#include <algorithm>

#include "qkdsim/errors.hpp"

namespace qkdsim {

BitString BitString::from_string(std::string_view text) {
    BitString out(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '0') {
            out.bits_[i] = 0;
        } else if (text[i] == '1') {
            out.bits_[i] = 1;
        } else {
            throw contract_error("BitString::from_string: character is not 0 or 1");
        }
    }
    return out;
}

BitString BitString::from_uint(std::uint64_t value, std::size_t len) {
    if (len > 64) throw contract_error("BitString::from_uint: len > 64");
    BitString out(len);
    for (std::size_t i = 0; i < len; ++i) {
        out.bits_[i] = static_cast<std::uint8_t>((value >> (len - 1 - i)) & 1u);
    }
    return out;
}

BitString BitString::from_bytes(const std::vector<std::uint8_t>& bytes, std::size_t bit_len) {
    if (bit_len > bytes.size() * 8) {
        throw contract_error("BitString::from_bytes: bit_len exceeds supplied bytes");
    }
    BitString out(bit_len);
    for (std::size_t i = 0; i < bit_len; ++i) {
        out.bits_[i] = (bytes[i / 8] >> (7 - (i % 8))) & 1u;
    }
    return out;
}

int BitString::bit(std::size_t i) const {
    if (i >= bits_.size()) throw contract_error("BitString::bit: index out of range");
    return bits_[i];
}

void BitString::set_bit(std::size_t i, int value) {
    if (i >= bits_.size()) throw contract_error("BitString::set_bit: index out of range");
    if (value != 0 && value != 1) throw contract_error("BitString::set_bit: value is not 0 or 1");
    bits_[i] = static_cast<std::uint8_t>(value);
}

void BitString::flip_bit(std::size_t i) {
    if (i >= bits_.size()) throw contract_error("BitString::flip_bit: index out of range");
    bits_[i] ^= 1u;
}

BitString BitString::operator^(const BitString& other) const {
    BitString out = *this;
    out ^= other;
    return out;
}

BitString& BitString::operator^=(const BitString& other) {
    if (bits_.size() != other.bits_.size()) {
        throw contract_error("BitString::operator^: length mismatch");
    }
    for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] ^= other.bits_[i];
    return *this;
}

BitString BitString::operator&(const BitString& other) const {
    if (bits_.size() != other.bits_.size()) {
        throw contract_error("BitString::operator&: length mismatch");
    }
    BitString out(bits_.size());
    for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] & other.bits_[i];
    return out;
}

int BitString::parity() const {
    int p = 0;
    for (std::uint8_t b : bits_) p ^= b;
    return p;
}

std::size_t BitString::hamming_weight() const {
    std::size_t w = 0;
    for (std::uint8_t b : bits_) w += b;
    return w;
}

std::size_t BitString::hamming_distance(const BitString& other) const {
    if (bits_.size() != other.bits_.size()) {
        throw contract_error("BitString::hamming_distance: length mismatch");
    }
    std::size_t d = 0;
    for (std::size_t i = 0; i < bits_.size(); ++i) d += bits_[i] ^ other.bits_[i];
    return d;
}

int BitString::dot(const BitString& other) const {
    if (bits_.size() != other.bits_.size()) {
        throw contract_error("BitString::dot: length mismatch");
    }
    int p = 0;
    for (std::size_t i = 0; i < bits_.size(); ++i) p ^= bits_[i] & other.bits_[i];
    return p;
}

BitString BitString::slice(std::size_t pos, std::size_t len) const {
    if (pos + len > bits_.size()) throw contract_error("BitString::slice: range out of bounds");
    BitString out(len);
    std::copy_n(bits_.begin() + static_cast<std::ptrdiff_t>(pos), len, out.bits_.begin());
    return out;
}

void BitString::append(const BitString& other) {
    bits_.insert(bits_.end(), other.bits_.begin(), other.bits_.end());
}

BitString BitString::concat(const BitString& a, const BitString& b) {
    BitString out = a;
    out.append(b);
    return out;
}

std::uint64_t BitString::to_uint() const {
    if (bits_.size() > 64) throw contract_error("BitString::to_uint: longer than 64 bits");
    std::uint64_t v = 0;
    for (std::uint8_t b : bits_) v = (v << 1) | b;
    return v;
}

std::string BitString::to_string() const {
    std::string s(bits_.size(), '0');
    for (std::size_t i = 0; i < bits_.size(); ++i) s[i] = bits_[i] ? '1' : '0';
    return s;
}

std::string BitString::to_hex() const {
    static const char* digits = "0123456789abcdef";
    std::vector<std::uint8_t> bytes = to_padded_bytes();
    std::string s;
    s.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0x0f]);
    }
    return s;
}

std::vector<std::uint8_t> BitString::to_padded_bytes() const {
    std::vector<std::uint8_t> bytes((bits_.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        if (bits_[i]) bytes[i / 8] |= static_cast<std::uint8_t>(1u << (7 - (i % 8)));
    }
    return bytes;
}

void BitString::serialize(std::vector<std::uint8_t>& out) const {
    put_u32_be(out, static_cast<std::uint32_t>(bits_.size()));
    std::vector<std::uint8_t> bytes = to_padded_bytes();
    out.insert(out.end(), bytes.begin(), bytes.end());
}

BitString BitString::deserialize(const std::vector<std::uint8_t>& bytes, std::size_t& offset) {
    std::uint32_t bit_len = get_u32_be(bytes, offset);
    std::size_t byte_len = (static_cast<std::size_t>(bit_len) + 7) / 8;
    if (offset + byte_len > bytes.size()) {
        throw parse_error("BitString::deserialize: truncated payload");
    }
    BitString out(bit_len);
    for (std::size_t i = 0; i < bit_len; ++i) {
        out.bits_[i] = (bytes[offset + i / 8] >> (7 - (i % 8))) & 1u;
    }
    // Padding bits must be zero so every bit string has exactly one encoding.
    for (std::size_t i = bit_len; i < byte_len * 8; ++i) {
        if ((bytes[offset + i / 8] >> (7 - (i % 8))) & 1u) {
            throw parse_error("BitString::deserialize: nonzero padding bit");
        }
    }
    offset += byte_len;
    return out;
}

std::strong_ordering BitString::operator<=>(const BitString& other) const {
    std::size_t n = std::min(bits_.size(), other.bits_.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (bits_[i] != other.bits_[i]) {
            return bits_[i] < other.bits_[i] ? std::strong_ordering::less
                                             : std::strong_ordering::greater;
        }
    }
    return bits_.size() <=> other.bits_.size();
}

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t value) {
    out.push_back(static_cast<std::uint8_t>(value >> 24));
    out.push_back(static_cast<std::uint8_t>(value >> 16));
    out.push_back(static_cast<std::uint8_t>(value >> 8));
    out.push_back(static_cast<std::uint8_t>(value));
}

std::uint32_t get_u32_be(const std::vector<std::uint8_t>& bytes, std::size_t& offset) {
    if (offset + 4 > bytes.size()) throw parse_error("get_u32_be: truncated integer");
    std::uint32_t v = (static_cast<std::uint32_t>(bytes[offset]) << 24) |
                      (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
                      (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
                      static_cast<std::uint32_t>(bytes[offset + 3]);
    offset += 4;
    return v;
}

}  // namespace qkdsim
