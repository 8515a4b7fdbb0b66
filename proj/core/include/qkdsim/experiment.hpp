#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qkdsim/adversary.hpp"
#include "qkdsim/auth.hpp"
#include "qkdsim/protocol.hpp"

namespace qkdsim {

// Optional parameter to vary across the points of one experiment.
enum class SweepField {
    none,
    list_size,       // adversary list size
    n_bits,          // tag length
    r_bits,          // compressed length (xor_fold only)
    auth_mode,       // immediate | postponed
    scheme,          // two_step | wegman_carter
    countermeasure,  // none | postponed | secret_hash_check | one_time_pad
};

SweepField sweep_field_from_string(const std::string& text);
std::string sweep_field_to_string(SweepField field);

// Textual forms shared by plan files and the command line.
SchemeKind scheme_kind_from_string(const std::string& text);
std::string scheme_kind_to_string(SchemeKind kind);
AuthMode auth_mode_from_string(const std::string& text);
std::string auth_mode_to_string(AuthMode mode);
// "xor_fold" or "crc:BITS" (e.g. "crc:10011").
PublicHashDescriptor public_hash_from_string(const std::string& text);
std::string public_hash_to_string(const PublicHashDescriptor& f);

struct ExperimentPlan {
    std::string label = "experiment";
    ProtocolConfig config;
    AdversaryStrategy strategy;
    std::size_t trials = 1000;
    SweepField sweep = SweepField::none;
    std::vector<std::string> sweep_values;

    // key=value lines; '#' starts a comment.  Unknown keys are rejected.
    static ExperimentPlan parse(const std::string& text);

    void validate() const;
};

struct PhaseStats {
    std::size_t attempted = 0;  // sessions in which this phase was forged
    std::size_t accepted = 0;   // ... and the delivered record still verified
};

// Aggregated results of `trials` independent sessions at one sweep point.
// All sums are accumulated in trial order, so the numbers are identical for
// any worker count.
struct TrialAggregate {
    std::string label;
    std::string point;  // sweep value, empty without a sweep
    std::string scheme_name;
    std::string auth_name;
    std::string adversary_name;

    std::size_t trials = 0;
    std::size_t completed = 0;
    std::size_t aborted_auth = 0;
    std::size_t aborted_qber = 0;
    std::size_t aborted_check = 0;
    std::size_t honest_key_match = 0;  // completed with alice key == bob key
    std::size_t eve_alice_agree = 0;   // completed with adversary key == alice key
    std::size_t eve_bob_agree = 0;
    PhaseStats phase[6];
    std::size_t forgeries_attempted = 0;
    std::size_t forgeries_accepted = 0;
    double mean_qber = 0.0;           // over completed sessions
    double mean_sift_fraction = 0.0;  // sender-side sifted / qubits, all sessions
    double mean_pool_alice = 0.0;     // authentication bits consumed per session
    double mean_pool_bob = 0.0;
    AnalyticBounds bounds;  // forgery-acceptance bound for this configuration

    double completion_rate() const {
        return trials ? static_cast<double>(completed) / static_cast<double>(trials) : 0.0;
    }
    double phase_acceptance(PhaseId id) const {
        const PhaseStats& st = phase[static_cast<std::size_t>(id)];
        return st.attempted ? static_cast<double>(st.accepted) /
                                  static_cast<double>(st.attempted)
                            : 0.0;
    }
    // Forged-and-accepted sessions per trial for one phase.
    double phase_success_rate(PhaseId id) const {
        const PhaseStats& st = phase[static_cast<std::size_t>(id)];
        return trials ? static_cast<double>(st.accepted) / static_cast<double>(trials)
                      : 0.0;
    }
};

// Analytic forgery-acceptance bound for a strategy against a scheme.
AnalyticBounds strategy_bounds(const AuthScheme& scheme,
                               const AdversaryStrategy& strategy);

// Run `trials` sessions with per-trial seeds config.seed + i and
// strategy.seed + i, optionally split across `jobs` threads.
TrialAggregate run_trials(const ProtocolConfig& config,
                          const AdversaryStrategy& strategy, std::size_t trials,
                          std::size_t jobs = 1);

// One aggregate per sweep point (a single aggregate without a sweep).
std::vector<TrialAggregate> run_plan(const ExperimentPlan& plan,
                                     std::size_t jobs = 1);

// Fixed-header CSV, floats with six significant digits; byte-identical for
// identical plans.
std::string emit_csv(const std::vector<TrialAggregate>& rows);

}  // namespace qkdsim
