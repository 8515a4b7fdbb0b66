#include <algorithm>

#include "doctest.h"
#include "qkdsim/errors.hpp"
#include "qkdsim/experiment.hpp"

using namespace qkdsim;

namespace {
// The single-message adversaries require settings payloads of exactly one
// 8-bit chunk, hence 8 qubits.
const char* kPlanText = R"(# demo plan
label = demo
scheme = two_step
num_qubits = 8
m_bits = 8
r_bits = 4
n_bits = 2
f = xor_fold

auth = immediate
error = 0.01
threshold = 0.2
block_bits = 8
margin_bits = 4
check = true
seed = 11
adversary = list:8
adversary_seed = 17
trials = 25
)";
}  // namespace

TEST_CASE("textual forms round-trip") {
    CHECK(scheme_kind_to_string(scheme_kind_from_string("two_step")) == "two_step");
    CHECK(scheme_kind_to_string(scheme_kind_from_string("wegman_carter")) ==
          "wegman_carter");
    CHECK_THROWS_AS(scheme_kind_from_string("both"), parse_error);

    CHECK(auth_mode_to_string(auth_mode_from_string("immediate")) == "immediate");
    CHECK(auth_mode_to_string(auth_mode_from_string("postponed")) == "postponed");
    CHECK_THROWS_AS(auth_mode_from_string("late"), parse_error);

    CHECK(public_hash_to_string(public_hash_from_string("xor_fold")) == "xor_fold");
    CHECK(public_hash_to_string(public_hash_from_string("crc:10011")) ==
          "crc:10011");
    CHECK(public_hash_from_string("crc:10011").crc_degree() == 4);
    CHECK_THROWS_AS(public_hash_from_string("md5"), parse_error);
    CHECK_THROWS_AS(public_hash_from_string("crc:"), parse_error);

    for (const char* name : {"none", "list_size", "n_bits", "r_bits", "auth_mode",
                             "scheme", "countermeasure"})
        CHECK(sweep_field_to_string(sweep_field_from_string(name)) == name);
    CHECK_THROWS_AS(sweep_field_from_string("qubits"), parse_error);
}

TEST_CASE("plan files parse into the full configuration") {
    const ExperimentPlan plan = ExperimentPlan::parse(kPlanText);
    CHECK(plan.label == "demo");
    CHECK(plan.config.scheme.kind == SchemeKind::two_step);
    CHECK(plan.config.scheme.space.m_bits == 8);
    CHECK(plan.config.scheme.space.r_bits == 4);
    CHECK(plan.config.scheme.space.n_bits == 2);
    CHECK(plan.config.num_qubits == 64);
    CHECK(plan.config.auth_mode == AuthMode::immediate);
    CHECK(plan.config.channel_error_rate == doctest::Approx(0.01));
    CHECK(plan.config.qber_abort_threshold == doctest::Approx(0.2));
    CHECK(plan.config.ec_block_bits == 8);
    CHECK(plan.config.pa_security_margin_bits == 4);
    CHECK(plan.config.secret_hash_check);
    CHECK(plan.config.seed == 11);
    CHECK(plan.strategy.kind == AdversaryKind::list);
    CHECK(plan.strategy.list_size == 8);
    CHECK(plan.strategy.seed == 17);
    CHECK(plan.trials == 25);
    CHECK(plan.sweep == SweepField::none);
    CHECK_NOTHROW(plan.validate());
    CHECK_NOTHROW(plan.config.validate());

    // Order independence: the adversary seed may precede the adversary.
    const ExperimentPlan pre =
        ExperimentPlan::parse("adversary_seed = 9\nadversary = guess_tag\n");
    CHECK(pre.strategy.seed == 9);

    CHECK_THROWS_AS(ExperimentPlan::parse("qubits = 8\n"), parse_error);
    CHECK_THROWS_AS(ExperimentPlan::parse("just a line\n"), parse_error);
    CHECK_THROWS_AS(ExperimentPlan::parse("trials = soon\n"), parse_error);
}

TEST_CASE("plan validation ties sweeps to their values") {
    ExperimentPlan plan = ExperimentPlan::parse(kPlanText);
    plan.sweep = SweepField::list_size;
    CHECK_THROWS_AS(plan.validate(), contract_error);
    plan.sweep_values = {"0", "4"};
    CHECK_NOTHROW(plan.validate());
    plan.sweep = SweepField::none;
    CHECK_THROWS_AS(plan.validate(), contract_error);
    plan.sweep_values.clear();
    plan.trials = 0;
    CHECK_THROWS_AS(plan.validate(), contract_error);
}

TEST_CASE("analytic bounds per strategy") {
    AuthScheme scheme;
    scheme.kind = SchemeKind::two_step;
    scheme.space = SpaceParams{8, 4, 2};
    scheme.f = PublicHashDescriptor::make_xor_fold();

    const AnalyticBounds guess =
        strategy_bounds(scheme, AdversaryStrategy::parse("guess_tag"));
    CHECK(guess.eps1 == doctest::Approx(0.0));
    CHECK(guess.eps2 == doctest::Approx(0.25));
    CHECK(guess.eps == doctest::Approx(0.25));

    const AnalyticBounds fixed =
        strategy_bounds(scheme, AdversaryStrategy::parse("fixed_message"));
    CHECK(fixed.eps1 == doctest::Approx(16.0 / 256.0));

    const AnalyticBounds list4 =
        strategy_bounds(scheme, AdversaryStrategy::parse("list:4"));
    CHECK(list4.eps1 == doctest::Approx(4.0 / 16.0));
    CHECK(list4.eps == doctest::Approx(0.5));

    const AnalyticBounds full =
        strategy_bounds(scheme, AdversaryStrategy::parse("full_mitm:full_list"));
    CHECK(full.eps1 == doctest::Approx(1.0));
    CHECK(full.eps == doctest::Approx(1.0));  // clamped at one

    AuthScheme wc = scheme;
    wc.kind = SchemeKind::wegman_carter;
    const AnalyticBounds wcb =
        strategy_bounds(wc, AdversaryStrategy::parse("full_mitm:full_list"));
    CHECK(wcb.eps1 == doctest::Approx(0.0));
    CHECK(wcb.eps == doctest::Approx(0.25));
}

TEST_CASE("aggregates are identical for any worker count and repeatable") {
    ExperimentPlan plan = ExperimentPlan::parse(kPlanText);
    const std::vector<TrialAggregate> serial = run_plan(plan, 1);
    const std::vector<TrialAggregate> threaded = run_plan(plan, 3);
    REQUIRE(serial.size() == 1);
    REQUIRE(threaded.size() == 1);
    CHECK(emit_csv(serial) == emit_csv(threaded));
    CHECK(emit_csv(serial) == emit_csv(run_plan(plan, 2)));
    CHECK(serial[0].trials == 25);
    CHECK(serial[0].completed + serial[0].aborted_auth + serial[0].aborted_qber +
              serial[0].aborted_check ==
          25);
}

TEST_CASE("CSV header and shape are frozen") {
    ExperimentPlan plan = ExperimentPlan::parse(kPlanText);
    plan.trials = 5;
    const std::string csv = emit_csv(run_plan(plan));
    const std::string header = csv.substr(0, csv.find('\n'));
    CHECK(header ==
          "label,point,scheme,auth_mode,adversary,trials,completed,"
          "completion_rate,aborted_auth,aborted_qber,aborted_check,"
          "honest_key_match,eve_alice_agree,eve_bob_agree,"
          "settings_attempted,settings_accepted,ec_maps_attempted,"
          "ec_maps_accepted,pa_map_attempted,pa_map_accepted,"
          "forgeries_attempted,forgeries_accepted,mean_qber,"
          "mean_sift_fraction,mean_pool_alice,mean_pool_bob,eps1,eps2,eps");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);  // header + one row
    CHECK(csv.find("demo,,two_step,immediate,list:8,5,") != std::string::npos);
}

TEST_CASE("sweeps emit one aggregate per value") {
    ExperimentPlan plan = ExperimentPlan::parse(kPlanText);
    plan.trials = 10;
    plan.sweep = SweepField::list_size;
    plan.sweep_values = {"0", "4", "16"};
    const std::vector<TrialAggregate> rows = run_plan(plan);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].point == "0");
    CHECK(rows[1].point == "4");
    CHECK(rows[2].point == "16");
    CHECK(rows[0].bounds.eps1 == doctest::Approx(0.0));
    CHECK(rows[1].bounds.eps1 == doctest::Approx(0.25));
    CHECK(rows[2].bounds.eps1 == doctest::Approx(1.0));
    CHECK(rows[0].adversary_name == "list:0");
    CHECK(rows[2].adversary_name == "list:16");
    // An empty table can never substitute; the full table always tries.
    CHECK(rows[0].phase[static_cast<std::size_t>(PhaseId::settings)].attempted ==
          0);
    CHECK(rows[2].phase[static_cast<std::size_t>(PhaseId::settings)].attempted >
          0);

    // Sweeping the countermeasure axis reuses one plan for all four arms.
    ExperimentPlan cm = ExperimentPlan::parse(kPlanText);
    cm.trials = 5;
    cm.sweep = SweepField::countermeasure;
    cm.sweep_values = {"none", "postponed", "secret_hash_check"};
    const std::vector<TrialAggregate> arms = run_plan(cm);
    REQUIRE(arms.size() == 3);
    CHECK(arms[0].auth_name == "immediate");
    CHECK(arms[1].auth_name == "postponed");
    CHECK(arms[2].auth_name == "immediate");
}
