#pragma once

#include <stdexcept>
#include <string>

namespace qkdsim {

// Violated precondition on a library call (bad lengths, out-of-range
// parameters, malformed input).  These indicate caller bugs, not data we
// should try to recover from.
struct contract_error : std::invalid_argument {
    explicit contract_error(const std::string& what) : std::invalid_argument(what) {}
};

// An exhaustive operation refused to run because its parameters exceed the
// desk-scale guard.  Callers that really mean it can pass override_guard.
struct guard_error : std::runtime_error {
    explicit guard_error(const std::string& what) : std::runtime_error(what) {}
};

// The shared one-time key pool ran out of bits.  Pools never wrap around.
struct key_exhausted_error : std::runtime_error {
    explicit key_exhausted_error(const std::string& what) : std::runtime_error(what) {}
};

// Feature accepted by configuration parsing but intentionally not provided.
struct unimplemented_error : std::runtime_error {
    explicit unimplemented_error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed wire bytes or plan/config file text.
struct parse_error : std::runtime_error {
    explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qkdsim
