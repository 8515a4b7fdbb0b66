#include "doctest.h"
#include "qkdsim/errors.hpp"
#include "qkdsim/wire.hpp"

using namespace qkdsim;

namespace {
std::vector<std::uint8_t> enc(PhaseBody body) {
    return encode(PhaseMessage{std::move(body)});
}
}  // namespace

TEST_CASE("phase ids are the wire bytes, in protocol order") {
    CHECK(enc(TimestampMsg{7})[0] == 0);
    CHECK(enc(SettingsMsg{BitString::from_string("1")})[0] == 1);
    CHECK(enc(EcMapsMsg{})[0] == 2);
    CHECK(enc(EcConfirmMsg{})[0] == 3);
    CHECK(enc(PaMapMsg{})[0] == 4);
    CHECK(enc(CheckMsg{})[0] == 5);
}

TEST_CASE("field layout: settings payload starts at byte 5") {
    const auto wire = enc(SettingsMsg{BitString::from_string("10100110")});
    REQUIRE(wire.size() == 6);
    CHECK(wire[4] == 8);     // bit count, big-endian u32
    CHECK(wire[5] == 0xa6);  // MSB-first payload byte
}

TEST_CASE("field layout: ec maps carries seeds then syndromes") {
    EcMapsMsg body;
    body.perm_seed = 0x01020304u;
    body.matrix_seed = 0x0a0b0c0du;
    body.syndromes = BitString::from_string("1110");
    const auto wire = enc(body);
    REQUIRE(wire.size() == 14);
    CHECK(wire[1] == 1);
    CHECK(wire[4] == 4);
    CHECK(wire[5] == 0x0a);
    CHECK(wire[12] == 4);     // syndrome bit count
    CHECK(wire[13] == 0xe0);  // 1110 padded
}

TEST_CASE("field layout: confirm ends with the corrected count") {
    EcConfirmMsg body;
    body.block_status = BitString::from_string("0001");
    body.corrected_bits = 9;
    const auto wire = enc(body);
    REQUIRE(wire.size() == 10);
    CHECK(wire.back() == 9);
}

TEST_CASE("encode and decode are inverse on every phase") {
    std::vector<std::vector<std::uint8_t>> wires;
    wires.push_back(enc(TimestampMsg{42}));
    wires.push_back(enc(SettingsMsg{BitString::from_string("0110")}));
    {
        EcMapsMsg m;
        m.perm_seed = 5;
        m.matrix_seed = 6;
        m.syndromes = BitString::from_string("101");
        wires.push_back(enc(m));
    }
    {
        EcConfirmMsg m;
        m.block_status = BitString::from_string("011000");
        m.corrected_bits = 3;
        wires.push_back(enc(m));
    }
    {
        PaMapMsg m;
        m.out_len = 11;
        m.seed = BitString::from_string("110010");
        wires.push_back(enc(m));
    }
    wires.push_back(enc(CheckMsg{BitString::from_string("0101")}));
    for (const auto& w : wires) {
        const PhaseMessage msg = decode(w);
        CHECK(encode(msg) == w);
    }
}

TEST_CASE("decode is strict") {
    CHECK_THROWS_AS(decode({}), parse_error);
    CHECK_THROWS_AS(decode({9, 0, 0, 0, 0}), parse_error);  // unknown phase id
    auto wire = enc(TimestampMsg{1});
    wire.push_back(0);  // trailing byte
    CHECK_THROWS_AS(decode(wire), parse_error);
    auto truncated = enc(SettingsMsg{BitString::from_string("10100110")});
    truncated.pop_back();
    CHECK_THROWS_AS(decode(truncated), parse_error);
    auto noisy = enc(SettingsMsg{BitString::from_string("110")});
    noisy.back() |= 0x10;  // padding noise past the third bit
    CHECK_THROWS_AS(decode(noisy), parse_error);
}

TEST_CASE("transcript export is one line per message") {
    Transcript t;
    t.entries.push_back(TranscriptEntry{Direction::bob_to_alice,
                                        PhaseId::timestamp_end_quantum,
                                        {0, 0, 0, 0, 1},
                                        BitString::from_string("10")});
    t.entries.push_back(TranscriptEntry{
        Direction::alice_to_bob, PhaseId::settings, {1, 0, 0, 0, 0}, std::nullopt});
    const auto lines = t.export_lines();
    REQUIRE(lines.size() == 2);
    CHECK(lines[0].find("bob->alice") != std::string::npos);
    CHECK(lines[0].find("timestamp") != std::string::npos);
    CHECK(lines[0].find("0000000001") != std::string::npos);
    CHECK(lines[1].find("-") != std::string::npos);
}

TEST_CASE("hex helper") {
    CHECK(bytes_to_hex({0x0f, 0xa0}) == "0fa0");
    CHECK(bytes_to_hex({}) == "");
}
