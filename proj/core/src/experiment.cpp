#include "qkdsim/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "qkdsim/errors.hpp"
#include "qkdsim/wire.hpp"

namespace qkdsim {

namespace {

std::string trim(const std::string& text) {
    std::size_t lo = 0, hi = text.size();
    while (lo < hi && std::isspace(static_cast<unsigned char>(text[lo]))) ++lo;
    while (hi > lo && std::isspace(static_cast<unsigned char>(text[hi - 1]))) --hi;
    return text.substr(lo, hi - lo);
}

std::size_t parse_size(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        const unsigned long v = std::stoul(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw parse_error("plan: expected a number for '" + key + "', got '" + value + "'");
    }
}

double parse_double(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw parse_error("plan: expected a number for '" + key + "', got '" + value + "'");
    }
}

bool parse_flag(const std::string& value, const std::string& key) {
    if (value == "0" || value == "false" || value == "off") return false;
    if (value == "1" || value == "true" || value == "on") return true;
    throw parse_error("plan: expected 0/1 for '" + key + "', got '" + value + "'");
}

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(',', start);
        if (pos == std::string::npos) {
            const std::string item = trim(text.substr(start));
            if (!item.empty()) out.push_back(item);
            return out;
        }
        const std::string item = trim(text.substr(start, pos - start));
        if (!item.empty()) out.push_back(item);
        start = pos + 1;
    }
}

// Apply one sweep value to a copy of the plan's base configuration.
void apply_sweep_value(SweepField field, const std::string& value,
                       ProtocolConfig& config, AdversaryStrategy& strategy) {
    switch (field) {
        case SweepField::none:
            break;
        case SweepField::list_size:
            strategy.list_size = parse_size(value, "sweep list_size");
            break;
        case SweepField::n_bits:
            config.scheme.space.n_bits = parse_size(value, "sweep n_bits");
            break;
        case SweepField::r_bits:
            config.scheme.space.r_bits = parse_size(value, "sweep r_bits");
            break;
        case SweepField::auth_mode:
            config.auth_mode = auth_mode_from_string(value);
            break;
        case SweepField::scheme:
            config.scheme.kind = scheme_kind_from_string(value);
            break;
        case SweepField::countermeasure:
            if (value == "none") {
                config.auth_mode = AuthMode::immediate;
                config.secret_hash_check = false;
                config.one_time_pad_reconciliation = false;
            } else if (value == "postponed") {
                config.auth_mode = AuthMode::postponed;
                config.secret_hash_check = false;
                config.one_time_pad_reconciliation = false;
            } else if (value == "secret_hash_check") {
                config.auth_mode = AuthMode::immediate;
                config.secret_hash_check = true;
                config.one_time_pad_reconciliation = false;
            } else if (value == "one_time_pad") {
                config.one_time_pad_reconciliation = true;
            } else {
                throw parse_error("unknown countermeasure '" + value + "'");
            }
            break;
    }
}

struct Counters {
    std::size_t completed = 0;
    std::size_t aborted_auth = 0;
    std::size_t aborted_qber = 0;
    std::size_t aborted_check = 0;
    std::size_t honest_key_match = 0;
    std::size_t eve_alice_agree = 0;
    std::size_t eve_bob_agree = 0;
    PhaseStats phase[6];
    std::size_t forg_attempted = 0;
    std::size_t forg_accepted = 0;

    void merge(const Counters& other) {
        completed += other.completed;
        aborted_auth += other.aborted_auth;
        aborted_qber += other.aborted_qber;
        aborted_check += other.aborted_check;
        honest_key_match += other.honest_key_match;
        eve_alice_agree += other.eve_alice_agree;
        eve_bob_agree += other.eve_bob_agree;
        for (std::size_t p = 0; p < 6; ++p) {
            phase[p].attempted += other.phase[p].attempted;
            phase[p].accepted += other.phase[p].accepted;
        }
        forg_attempted += other.forg_attempted;
        forg_accepted += other.forg_accepted;
    }
};

void run_range(const ProtocolConfig& base_config,
               const AdversaryStrategy& base_strategy, std::size_t lo,
               std::size_t hi, Counters& counters, std::vector<double>& qber,
               std::vector<double>& sift, std::vector<double>& pool_a,
               std::vector<double>& pool_b) {
    for (std::size_t i = lo; i < hi; ++i) {
        ProtocolConfig config = base_config;
        config.seed = base_config.seed + i;
        AdversaryStrategy strategy = base_strategy;
        strategy.seed = base_strategy.seed + i;
        const std::unique_ptr<ChannelAdversary> adversary =
            make_adversary(config, strategy);
        const SessionOutcome out = run_session(config, adversary.get());

        switch (out.status) {
            case SessionStatus::completed: ++counters.completed; break;
            case SessionStatus::aborted_auth: ++counters.aborted_auth; break;
            case SessionStatus::aborted_qber: ++counters.aborted_qber; break;
            case SessionStatus::aborted_check: ++counters.aborted_check; break;
        }
        if (out.completed()) {
            if (out.alice_final_key && out.bob_final_key &&
                *out.alice_final_key == *out.bob_final_key)
                ++counters.honest_key_match;
            if (out.alice_final_key && out.eve_key_with_alice &&
                *out.alice_final_key == *out.eve_key_with_alice)
                ++counters.eve_alice_agree;
            if (out.bob_final_key && out.eve_key_with_bob &&
                *out.bob_final_key == *out.eve_key_with_bob)
                ++counters.eve_bob_agree;
            qber[i] = out.qber_estimate;
        }
        if (adversary) {
            for (std::size_t p = 0; p < 6; ++p) {
                const PhaseId id = static_cast<PhaseId>(p);
                if (!adversary->attempted_phase(id)) continue;
                ++counters.phase[p].attempted;
                for (const MessageRecord& rec : out.messages) {
                    if (rec.phase != id) continue;
                    if (rec.accepted) ++counters.phase[p].accepted;
                    break;
                }
            }
        }
        counters.forg_attempted += out.forgeries_attempted;
        counters.forg_accepted += out.forgeries_accepted;
        sift[i] = base_config.num_qubits
                      ? static_cast<double>(out.alice_sifted) /
                            static_cast<double>(base_config.num_qubits)
                      : 0.0;
        pool_a[i] = static_cast<double>(out.alice_pool_consumed);
        pool_b[i] = static_cast<double>(out.bob_pool_consumed);
    }
}

std::string format_double(double value) {
    std::ostringstream os;
    os << std::setprecision(6) << value;
    return os.str();
}

}  // namespace

std::string scheme_kind_to_string(SchemeKind kind) {
    return kind == SchemeKind::two_step ? "two_step" : "wegman_carter";
}

SchemeKind scheme_kind_from_string(const std::string& text) {
    if (text == "two_step") return SchemeKind::two_step;
    if (text == "wegman_carter") return SchemeKind::wegman_carter;
    throw parse_error("unknown scheme '" + text + "'");
}

std::string auth_mode_to_string(AuthMode mode) {
    return mode == AuthMode::immediate ? "immediate" : "postponed";
}

AuthMode auth_mode_from_string(const std::string& text) {
    if (text == "immediate") return AuthMode::immediate;
    if (text == "postponed") return AuthMode::postponed;
    throw parse_error("unknown auth mode '" + text + "'");
}

PublicHashDescriptor public_hash_from_string(const std::string& text) {
    if (text == "xor_fold") return PublicHashDescriptor::make_xor_fold();
    const std::string prefix = "crc:";
    if (text.rfind(prefix, 0) == 0)
        return PublicHashDescriptor::make_crc(
            BitString::from_string(text.substr(prefix.size())));
    throw parse_error("unknown public hash '" + text + "' (use xor_fold or crc:BITS)");
}

std::string public_hash_to_string(const PublicHashDescriptor& f) {
    if (f.kind == PublicHashKind::xor_fold) return "xor_fold";
    return "crc:" + f.poly.to_string();
}

SweepField sweep_field_from_string(const std::string& text) {
    if (text == "none") return SweepField::none;
    if (text == "list_size") return SweepField::list_size;
    if (text == "n_bits") return SweepField::n_bits;
    if (text == "r_bits") return SweepField::r_bits;
    if (text == "auth_mode") return SweepField::auth_mode;
    if (text == "scheme") return SweepField::scheme;
    if (text == "countermeasure") return SweepField::countermeasure;
    throw parse_error("unknown sweep field '" + text + "'");
}

std::string sweep_field_to_string(SweepField field) {
    switch (field) {
        case SweepField::none: return "none";
        case SweepField::list_size: return "list_size";
        case SweepField::n_bits: return "n_bits";
        case SweepField::r_bits: return "r_bits";
        case SweepField::auth_mode: return "auth_mode";
        case SweepField::scheme: return "scheme";
        case SweepField::countermeasure: return "countermeasure";
    }
    throw contract_error("unreachable sweep field");
}

ExperimentPlan ExperimentPlan::parse(const std::string& text) {
    ExperimentPlan plan;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw parse_error("plan: expected key=value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "label") {
            plan.label = value;
        } else if (key == "scheme") {
            plan.config.scheme.kind = scheme_kind_from_string(value);
        } else if (key == "m_bits") {
            plan.config.scheme.space.m_bits = parse_size(value, key);
        } else if (key == "r_bits") {
            plan.config.scheme.space.r_bits = parse_size(value, key);
        } else if (key == "n_bits") {
            plan.config.scheme.space.n_bits = parse_size(value, key);
        } else if (key == "f") {
            plan.config.scheme.f = public_hash_from_string(value);
        } else if (key == "num_qubits") {
            plan.config.num_qubits = parse_size(value, key);
        } else if (key == "auth") {
            plan.config.auth_mode = auth_mode_from_string(value);
        } else if (key == "error") {
            plan.config.channel_error_rate = parse_double(value, key);
        } else if (key == "threshold") {
            plan.config.qber_abort_threshold = parse_double(value, key);
        } else if (key == "block_bits") {
            plan.config.ec_block_bits = parse_size(value, key);
        } else if (key == "margin_bits") {
            plan.config.pa_security_margin_bits = parse_size(value, key);
        } else if (key == "check") {
            plan.config.secret_hash_check = parse_flag(value, key);
        } else if (key == "one_time_pad") {
            plan.config.one_time_pad_reconciliation = parse_flag(value, key);
        } else if (key == "seed") {
            plan.config.seed = parse_size(value, key);
        } else if (key == "pool_bits") {
            plan.config.pool_bits = parse_size(value, key);
        } else if (key == "adversary") {
            const AdversaryStrategy parsed = AdversaryStrategy::parse(value);
            const std::uint64_t keep_seed = plan.strategy.seed;
            plan.strategy = parsed;
            plan.strategy.seed = keep_seed;
        } else if (key == "adversary_seed") {
            plan.strategy.seed = parse_size(value, key);
        } else if (key == "trials") {
            plan.trials = parse_size(value, key);
        } else if (key == "sweep") {
            plan.sweep = sweep_field_from_string(value);
        } else if (key == "sweep_values") {
            plan.sweep_values = split_commas(value);
        } else {
            throw parse_error("plan: unknown key '" + key + "'");
        }
    }
    return plan;
}

void ExperimentPlan::validate() const {
    if (trials == 0) throw contract_error("plan: trials must be positive");
    if (sweep != SweepField::none && sweep_values.empty())
        throw contract_error("plan: sweep requires sweep_values");
    if (sweep == SweepField::none && !sweep_values.empty())
        throw contract_error("plan: sweep_values without a sweep field");
}

AnalyticBounds strategy_bounds(const AuthScheme& scheme,
                               const AdversaryStrategy& strategy) {
    const SpaceParams& space = scheme.space;
    const std::size_t digests = std::size_t{1} << space.r_bits;
    const auto base_message = [&]() {
        Rng pick(strategy.seed);
        return rng_bits(pick, space.m_bits);
    };
    switch (strategy.kind) {
        case AdversaryKind::absent:
        case AdversaryKind::guess_tag:
            return analytic_bounds(scheme, ListModel{0});
        case AdversaryKind::fixed_message:
            return analytic_bounds(scheme, FixedMessageModel{base_message()});
        case AdversaryKind::ball_search: {
            const std::size_t covered =
                scheme.kind == SchemeKind::two_step
                    ? digests_within_radius(scheme.f, space, base_message(),
                                            strategy.max_radius)
                    : 0;
            return analytic_bounds(scheme, ListModel{covered});
        }
        case AdversaryKind::list:
            return analytic_bounds(scheme, ListModel{strategy.list_size});
        case AdversaryKind::full_mitm:
            switch (strategy.search_mode) {
                case MitmSearchMode::full_list:
                    return analytic_bounds(scheme, ListModel{digests});
                case MitmSearchMode::ball_search: {
                    const std::size_t covered =
                        scheme.kind == SchemeKind::two_step
                            ? digests_within_radius(scheme.f, space, base_message(),
                                                    strategy.max_radius)
                            : 0;
                    return analytic_bounds(scheme, ListModel{covered});
                }
                case MitmSearchMode::list:
                    return analytic_bounds(scheme, ListModel{strategy.list_size});
            }
    }
    throw contract_error("unreachable adversary kind");
}

TrialAggregate run_trials(const ProtocolConfig& config,
                          const AdversaryStrategy& strategy, std::size_t trials,
                          std::size_t jobs) {
    config.validate();
    strategy.validate(config.scheme.space);
    if (trials == 0) throw contract_error("run_trials: trials must be positive");
    if (jobs == 0) jobs = 1;
    jobs = std::min(jobs, trials);

    std::vector<double> qber(trials, 0.0), sift(trials, 0.0);
    std::vector<double> pool_a(trials, 0.0), pool_b(trials, 0.0);
    std::vector<Counters> partial(jobs);

    if (jobs == 1) {
        run_range(config, strategy, 0, trials, partial[0], qber, sift, pool_a,
                  pool_b);
    } else {
        std::vector<std::thread> workers;
        workers.reserve(jobs);
        const std::size_t chunk = (trials + jobs - 1) / jobs;
        for (std::size_t w = 0; w < jobs; ++w) {
            const std::size_t lo = w * chunk;
            const std::size_t hi = std::min(trials, lo + chunk);
            if (lo >= hi) break;
            workers.emplace_back([&, w, lo, hi]() {
                run_range(config, strategy, lo, hi, partial[w], qber, sift,
                          pool_a, pool_b);
            });
        }
        for (std::thread& t : workers) t.join();
    }

    Counters total;
    for (const Counters& c : partial) total.merge(c);

    TrialAggregate agg;
    agg.scheme_name = scheme_kind_to_string(config.scheme.kind);
    agg.auth_name = auth_mode_to_string(config.auth_mode);
    agg.adversary_name = strategy.to_string();
    agg.trials = trials;
    agg.completed = total.completed;
    agg.aborted_auth = total.aborted_auth;
    agg.aborted_qber = total.aborted_qber;
    agg.aborted_check = total.aborted_check;
    agg.honest_key_match = total.honest_key_match;
    agg.eve_alice_agree = total.eve_alice_agree;
    agg.eve_bob_agree = total.eve_bob_agree;
    for (std::size_t p = 0; p < 6; ++p) agg.phase[p] = total.phase[p];
    agg.forgeries_attempted = total.forg_attempted;
    agg.forgeries_accepted = total.forg_accepted;

    // Deterministic order: sum in trial order regardless of worker count.
    double qber_sum = 0.0, sift_sum = 0.0, pa_sum = 0.0, pb_sum = 0.0;
    for (std::size_t i = 0; i < trials; ++i) {
        qber_sum += qber[i];
        sift_sum += sift[i];
        pa_sum += pool_a[i];
        pb_sum += pool_b[i];
    }
    agg.mean_qber =
        total.completed ? qber_sum / static_cast<double>(total.completed) : 0.0;
    agg.mean_sift_fraction = sift_sum / static_cast<double>(trials);
    agg.mean_pool_alice = pa_sum / static_cast<double>(trials);
    agg.mean_pool_bob = pb_sum / static_cast<double>(trials);
    agg.bounds = strategy_bounds(config.scheme, strategy);
    return agg;
}

std::vector<TrialAggregate> run_plan(const ExperimentPlan& plan,
                                     std::size_t jobs) {
    plan.validate();
    std::vector<TrialAggregate> rows;
    if (plan.sweep == SweepField::none) {
        TrialAggregate agg =
            run_trials(plan.config, plan.strategy, plan.trials, jobs);
        agg.label = plan.label;
        rows.push_back(std::move(agg));
        return rows;
    }
    for (const std::string& value : plan.sweep_values) {
        ProtocolConfig config = plan.config;
        AdversaryStrategy strategy = plan.strategy;
        apply_sweep_value(plan.sweep, value, config, strategy);
        TrialAggregate agg = run_trials(config, strategy, plan.trials, jobs);
        agg.label = plan.label;
        agg.point = value;
        rows.push_back(std::move(agg));
    }
    return rows;
}

std::string emit_csv(const std::vector<TrialAggregate>& rows) {
    std::ostringstream os;
    os << "label,point,scheme,auth_mode,adversary,trials,completed,"
          "completion_rate,aborted_auth,aborted_qber,aborted_check,"
          "honest_key_match,eve_alice_agree,eve_bob_agree,"
          "settings_attempted,settings_accepted,ec_maps_attempted,"
          "ec_maps_accepted,pa_map_attempted,pa_map_accepted,"
          "forgeries_attempted,forgeries_accepted,mean_qber,"
          "mean_sift_fraction,mean_pool_alice,mean_pool_bob,eps1,eps2,eps\n";
    for (const TrialAggregate& row : rows) {
        const PhaseStats& st = row.phase[static_cast<std::size_t>(PhaseId::settings)];
        const PhaseStats& ec = row.phase[static_cast<std::size_t>(PhaseId::ec_maps)];
        const PhaseStats& pa = row.phase[static_cast<std::size_t>(PhaseId::pa_map)];
        os << row.label << ',' << row.point << ',' << row.scheme_name << ','
           << row.auth_name << ',' << row.adversary_name << ',' << row.trials
           << ',' << row.completed << ',' << format_double(row.completion_rate())
           << ',' << row.aborted_auth << ',' << row.aborted_qber << ','
           << row.aborted_check << ',' << row.honest_key_match << ','
           << row.eve_alice_agree << ',' << row.eve_bob_agree << ','
           << st.attempted << ',' << st.accepted << ',' << ec.attempted << ','
           << ec.accepted << ',' << pa.attempted << ',' << pa.accepted << ','
           << row.forgeries_attempted << ',' << row.forgeries_accepted << ','
           << format_double(row.mean_qber) << ','
           << format_double(row.mean_sift_fraction) << ','
           << format_double(row.mean_pool_alice) << ','
           << format_double(row.mean_pool_bob) << ','
           << format_double(row.bounds.eps1) << ','
           << format_double(row.bounds.eps2) << ','
           << format_double(row.bounds.eps) << '\n';
    }
    return os.str();
}

}  // namespace qkdsim
