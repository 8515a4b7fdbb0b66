// Command-line front end: honest and attacked key-agreement sessions,
// strongly-universal family verification, Monte Carlo experiment plans, and
// analytic forgery bounds.  All output is deterministic for a given seed.

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "qkdsim/adversary.hpp"
#include "qkdsim/errors.hpp"
#include "qkdsim/experiment.hpp"
#include "qkdsim/protocol.hpp"
#include "qkdsim/su2.hpp"

namespace {

using namespace qkdsim;

struct CliConfig {
    std::size_t qubits = 512;
    std::size_t m_bits = 8;
    std::size_t r_bits = 4;
    std::size_t n_bits = 2;
    std::string hash = "crc:10011";
    std::string scheme = "two_step";
    std::string auth = "immediate";
    double error = 0.0;
    double threshold = 0.25;
    std::size_t block_bits = 16;
    std::size_t margin_bits = 16;
    bool check = false;
    bool one_time_pad = false;
    std::size_t seed = 1;
    std::size_t pool_bits = std::size_t{1} << 20;
    std::string adversary = "none";
    std::size_t adversary_seed = 1;
};

void add_config_options(CLI::App* cmd, CliConfig& cfg) {
    cmd->add_option("--qubits", cfg.qubits, "Qubits per session");
    cmd->add_option("--m", cfg.m_bits, "Chunk length in bits");
    cmd->add_option("--r", cfg.r_bits, "Compressed length in bits");
    cmd->add_option("--n", cfg.n_bits, "Tag length in bits");
    cmd->add_option("--f", cfg.hash, "Public hash: xor_fold or crc:BITS");
    cmd->add_option("--scheme", cfg.scheme, "two_step or wegman_carter");
    cmd->add_option("--auth", cfg.auth, "immediate or postponed");
    cmd->add_option("--error", cfg.error, "Channel flip probability");
    cmd->add_option("--threshold", cfg.threshold, "Abort threshold on the error estimate");
    cmd->add_option("--block-bits", cfg.block_bits, "Reconciliation block size");
    cmd->add_option("--margin-bits", cfg.margin_bits, "Privacy-amplification margin");
    cmd->add_flag("--check", cfg.check, "Enable the secret digest comparison");
    cmd->add_flag("--one-time-pad", cfg.one_time_pad, "Request one-time-pad reconciliation");
    cmd->add_option("--seed", cfg.seed, "Session seed");
    cmd->add_option("--pool-bits", cfg.pool_bits, "Preshared authentication pool size");
    cmd->add_option("--adversary", cfg.adversary,
                    "none | guess_tag | fixed_message | ball_search[:R] | "
                    "list:L | full_mitm[:MODE]");
    cmd->add_option("--adversary-seed", cfg.adversary_seed, "Adversary seed");
}

ProtocolConfig build_config(const CliConfig& cfg) {
    ProtocolConfig config;
    config.scheme.kind = scheme_kind_from_string(cfg.scheme);
    config.scheme.space = SpaceParams{cfg.m_bits, cfg.r_bits, cfg.n_bits};
    config.scheme.f = public_hash_from_string(cfg.hash);
    config.num_qubits = cfg.qubits;
    config.auth_mode = auth_mode_from_string(cfg.auth);
    config.channel_error_rate = cfg.error;
    config.qber_abort_threshold = cfg.threshold;
    config.ec_block_bits = cfg.block_bits;
    config.pa_security_margin_bits = cfg.margin_bits;
    config.secret_hash_check = cfg.check;
    config.one_time_pad_reconciliation = cfg.one_time_pad;
    config.seed = cfg.seed;
    config.pool_bits = cfg.pool_bits;
    return config;
}

AdversaryStrategy build_strategy(const CliConfig& cfg) {
    AdversaryStrategy strategy = AdversaryStrategy::parse(cfg.adversary);
    strategy.seed = cfg.adversary_seed;
    return strategy;
}

std::string fmt(double value) {
    std::ostringstream os;
    os << std::setprecision(6) << value;
    return os.str();
}

int run_verify_su2(std::size_t r_bits, std::size_t n_bits, bool override_guard) {
    const Su2VerificationReport report =
        verify_su2_family(r_bits, n_bits, override_guard);
    std::cout << "family_size=" << report.family_size << '\n'
              << "cells=" << report.cells << '\n'
              << "expected_per_cell=" << report.expected_count << '\n'
              << "min_per_cell=" << report.min_count << '\n'
              << "max_per_cell=" << report.max_count << '\n'
              << "uniform=" << (report.exact ? "PASS" : "FAIL") << '\n';
    return report.exact ? 0 : 1;
}

int run_one_session(const CliConfig& cfg, bool show_forgeries, bool show_transcript) {
    const ProtocolConfig config = build_config(cfg);
    config.validate();
    const AdversaryStrategy strategy = build_strategy(cfg);
    const std::unique_ptr<ChannelAdversary> adversary =
        make_adversary(config, strategy);
    const SessionOutcome out = run_session(config, adversary.get());

    std::cout << "status=" << session_status_name(out.status) << '\n'
              << "alice_abort=" << abort_reason_name(out.alice_abort) << '\n'
              << "bob_abort=" << abort_reason_name(out.bob_abort) << '\n'
              << "alice_sifted=" << out.alice_sifted << '\n'
              << "bob_sifted=" << out.bob_sifted << '\n'
              << "alice_reconciled=" << out.alice_reconciled << '\n'
              << "bob_reconciled=" << out.bob_reconciled << '\n'
              << "corrected_bits=" << out.corrected_bits << '\n'
              << "qber_estimate=" << fmt(out.qber_estimate) << '\n'
              << "pa_out_len=" << out.pa_out_len << '\n';
    if (out.alice_final_key)
        std::cout << "alice_key=" << out.alice_final_key->to_hex() << '\n';
    if (out.bob_final_key)
        std::cout << "bob_key=" << out.bob_final_key->to_hex() << '\n';
    if (out.alice_final_key && out.bob_final_key)
        std::cout << "keys_match="
                  << (*out.alice_final_key == *out.bob_final_key ? 1 : 0) << '\n';
    if (out.eve_key_with_alice)
        std::cout << "eve_alice_agree="
                  << (out.alice_final_key &&
                              *out.eve_key_with_alice == *out.alice_final_key
                          ? 1
                          : 0)
                  << '\n';
    if (out.eve_key_with_bob)
        std::cout << "eve_bob_agree="
                  << (out.bob_final_key && *out.eve_key_with_bob == *out.bob_final_key
                          ? 1
                          : 0)
                  << '\n';
    std::cout << "forgeries_attempted=" << out.forgeries_attempted << '\n'
              << "forgeries_accepted=" << out.forgeries_accepted << '\n'
              << "alice_pool_consumed=" << out.alice_pool_consumed << '\n'
              << "bob_pool_consumed=" << out.bob_pool_consumed << '\n';

    if (show_forgeries && adversary) {
        std::vector<ForgeryRecord> log;
        if (const auto* mitm = dynamic_cast<const FullMitmAdversary*>(adversary.get()))
            log = mitm->forgery_log();
        else if (const auto* single =
                     dynamic_cast<const SettingsChunkAdversary*>(adversary.get()))
            log = single->forgery_log();
        for (const ForgeryRecord& rec : log)
            std::cout << "forgery " << forgery_line(rec) << '\n';
    }
    if (show_transcript)
        for (const std::string& line : out.transcript.export_lines())
            std::cout << line << '\n';
    return 0;
}

int run_experiment(const std::string& plan_path, const std::string& out_path,
                   std::size_t jobs) {
    std::ifstream in(plan_path);
    if (!in) {
        std::cerr << "error: cannot open plan file '" << plan_path << "'\n";
        return 1;
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const ExperimentPlan plan = ExperimentPlan::parse(buffer.str());
    const std::vector<TrialAggregate> rows = run_plan(plan, jobs);
    const std::string csv = emit_csv(rows);
    if (out_path.empty()) {
        std::cout << csv;
    } else {
        std::ofstream out(out_path);
        if (!out) {
            std::cerr << "error: cannot write '" << out_path << "'\n";
            return 1;
        }
        out << csv;
    }
    return 0;
}

int run_bounds(const CliConfig& cfg) {
    const ProtocolConfig config = build_config(cfg);
    config.scheme.validate();
    const AdversaryStrategy strategy = build_strategy(cfg);
    const AnalyticBounds bounds = strategy_bounds(config.scheme, strategy);
    std::cout << "scheme=" << cfg.scheme << '\n'
              << "adversary=" << strategy.to_string() << '\n'
              << "key_cost_per_tag=" << config.scheme.key_cost_per_tag() << '\n'
              << "eps1=" << fmt(bounds.eps1) << '\n'
              << "eps2=" << fmt(bounds.eps2) << '\n'
              << "eps=" << fmt(bounds.eps) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic simulator for two-step quantum-key-distribution "
                 "authentication and its man-in-the-middle attack"};
    app.require_subcommand(1);

    std::size_t su2_r = 2, su2_n = 1;
    bool su2_override = false;
    CLI::App* verify = app.add_subcommand(
        "verify-su2", "Exhaustively verify tag-family uniformity");
    verify->add_option("--r", su2_r, "Input length in bits");
    verify->add_option("--n", su2_n, "Tag length in bits");
    verify->add_flag("--override-guard", su2_override,
                     "Allow sizes beyond the enumeration guard");

    CliConfig session_cfg;
    bool show_forgeries = false, show_transcript = false;
    CLI::App* session =
        app.add_subcommand("session", "Run a single key-agreement session");
    add_config_options(session, session_cfg);
    session->add_flag("--forgery-log", show_forgeries, "Print the adversary's forgery log");
    session->add_flag("--transcript", show_transcript, "Print the message transcript");

    std::string plan_path, out_path;
    std::size_t jobs = 1;
    CLI::App* experiment =
        app.add_subcommand("experiment", "Run a Monte Carlo experiment plan");
    experiment->add_option("plan", plan_path, "Plan file (key=value lines)")
        ->required();
    experiment->add_option("--out", out_path, "CSV output path (default stdout)");
    experiment->add_option("--jobs", jobs, "Worker threads");

    CliConfig bounds_cfg;
    CLI::App* bounds = app.add_subcommand(
        "bounds", "Print the analytic forgery-acceptance bound");
    add_config_options(bounds, bounds_cfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        if (verify->parsed()) return run_verify_su2(su2_r, su2_n, su2_override);
        if (session->parsed())
            return run_one_session(session_cfg, show_forgeries, show_transcript);
        if (experiment->parsed()) return run_experiment(plan_path, out_path, jobs);
        if (bounds->parsed()) return run_bounds(bounds_cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
