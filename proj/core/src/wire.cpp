#include "qkdsim/wire.hpp"

#include "qkdsim/errors.hpp"

namespace qkdsim {

const char* phase_name(PhaseId phase) {
    switch (phase) {
        case PhaseId::timestamp_end_quantum: return "timestamp_end_quantum";
        case PhaseId::settings: return "settings";
        case PhaseId::ec_maps: return "ec_maps";
        case PhaseId::ec_confirm: return "ec_confirm";
        case PhaseId::pa_map: return "pa_map";
        case PhaseId::secret_hash_check: return "secret_hash_check";
    }
    return "unknown";
}

const char* direction_name(Direction dir) {
    return dir == Direction::alice_to_bob ? "alice->bob" : "bob->alice";
}

PhaseId PhaseMessage::phase() const {
    return static_cast<PhaseId>(body.index());
}

std::vector<std::uint8_t> encode(const PhaseMessage& msg) {
    std::vector<std::uint8_t> out;
    out.push_back(static_cast<std::uint8_t>(msg.phase()));
    std::visit(
        [&out](const auto& body) {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, TimestampMsg>) {
                put_u32_be(out, body.round_id);
            } else if constexpr (std::is_same_v<T, SettingsMsg>) {
                body.bases.serialize(out);
            } else if constexpr (std::is_same_v<T, EcMapsMsg>) {
                put_u32_be(out, body.perm_seed);
                put_u32_be(out, body.matrix_seed);
                body.syndromes.serialize(out);
            } else if constexpr (std::is_same_v<T, EcConfirmMsg>) {
                body.block_status.serialize(out);
                put_u32_be(out, body.corrected_bits);
            } else if constexpr (std::is_same_v<T, PaMapMsg>) {
                put_u32_be(out, body.out_len);
                body.seed.serialize(out);
            } else if constexpr (std::is_same_v<T, CheckMsg>) {
                body.value.serialize(out);
            }
        },
        msg.body);
    return out;
}

PhaseMessage decode(const std::vector<std::uint8_t>& wire) {
    if (wire.empty()) throw parse_error("decode: empty message");
    std::size_t offset = 1;
    PhaseMessage msg;
    switch (static_cast<PhaseId>(wire[0])) {
        case PhaseId::timestamp_end_quantum: {
            TimestampMsg body;
            body.round_id = get_u32_be(wire, offset);
            msg.body = body;
            break;
        }
        case PhaseId::settings: {
            SettingsMsg body;
            body.bases = BitString::deserialize(wire, offset);
            msg.body = body;
            break;
        }
        case PhaseId::ec_maps: {
            EcMapsMsg body;
            body.perm_seed = get_u32_be(wire, offset);
            body.matrix_seed = get_u32_be(wire, offset);
            body.syndromes = BitString::deserialize(wire, offset);
            msg.body = body;
            break;
        }
        case PhaseId::ec_confirm: {
            EcConfirmMsg body;
            body.block_status = BitString::deserialize(wire, offset);
            body.corrected_bits = get_u32_be(wire, offset);
            msg.body = body;
            break;
        }
        case PhaseId::pa_map: {
            PaMapMsg body;
            body.out_len = get_u32_be(wire, offset);
            body.seed = BitString::deserialize(wire, offset);
            msg.body = body;
            break;
        }
        case PhaseId::secret_hash_check: {
            CheckMsg body;
            body.value = BitString::deserialize(wire, offset);
            msg.body = body;
            break;
        }
        default:
            throw parse_error("decode: unknown phase id");
    }
    if (offset != wire.size()) throw parse_error("decode: trailing bytes");
    return msg;
}

std::string bytes_to_hex(const std::vector<std::uint8_t>& bytes) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0x0f]);
    }
    return s;
}

std::vector<std::string> Transcript::export_lines() const {
    std::vector<std::string> lines;
    lines.reserve(entries.size() + 2);
    for (const TranscriptEntry& e : entries) {
        std::string line = direction_name(e.dir);
        line += ' ';
        line += phase_name(e.phase);
        line += ' ';
        line += bytes_to_hex(e.wire);
        line += ' ';
        line += e.tag ? e.tag->to_hex() : std::string("-");
        lines.push_back(std::move(line));
    }
    if (terminal_tag_alice_to_bob) {
        lines.push_back(std::string(direction_name(Direction::alice_to_bob)) +
                        " terminal_tag - " + terminal_tag_alice_to_bob->to_hex());
    }
    if (terminal_tag_bob_to_alice) {
        lines.push_back(std::string(direction_name(Direction::bob_to_alice)) +
                        " terminal_tag - " + terminal_tag_bob_to_alice->to_hex());
    }
    return lines;
}

}  // namespace qkdsim
