#pragma once

// Experiment orchestration: JSON configuration, parameter sweeps over the
// planners, delimited result files and planning cost reports.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seeplan/format.hpp"
#include "seeplan/mdp.hpp"
#include "seeplan/planners.hpp"
#include "seeplan/sim.hpp"

namespace seeplan {

enum class Algorithm { FHJPA, GA, IHJPA };
enum class EvalMode { Exact, MonteCarlo };
enum class SweepVariable { HarvestSrc, HarvestDst, ProbSrc, ProbDst, Horizon };

inline std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::FHJPA: return "fhjpa";
        case Algorithm::GA: return "ga";
        case Algorithm::IHJPA: return "ihjpa";
    }
    return "?";
}

inline std::string to_string(EvalMode m) { return m == EvalMode::Exact ? "exact" : "mc"; }

inline std::string to_string(SweepVariable v) {
    switch (v) {
        case SweepVariable::HarvestSrc: return "E_S";
        case SweepVariable::HarvestDst: return "E_D";
        case SweepVariable::ProbSrc: return "p";
        case SweepVariable::ProbDst: return "q";
        case SweepVariable::Horizon: return "K";
    }
    return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
    if (s == "fhjpa") return Algorithm::FHJPA;
    if (s == "ga") return Algorithm::GA;
    if (s == "ihjpa") return Algorithm::IHJPA;
    throw ConfigError("unknown algorithm '" + s + "' (expected fhjpa, ga or ihjpa)");
}

inline EvalMode parse_mode(const std::string& s) {
    if (s == "exact") return EvalMode::Exact;
    if (s == "mc" || s == "monte-carlo") return EvalMode::MonteCarlo;
    throw ConfigError("unknown evaluation mode '" + s + "' (expected exact or mc)");
}

inline SweepVariable parse_sweep_variable(const std::string& s) {
    if (s == "E_S") return SweepVariable::HarvestSrc;
    if (s == "E_D") return SweepVariable::HarvestDst;
    if (s == "p") return SweepVariable::ProbSrc;
    if (s == "q") return SweepVariable::ProbDst;
    if (s == "K") return SweepVariable::Horizon;
    throw ConfigError("unknown sweep variable '" + s + "' (expected E_S, E_D, p, q or K)");
}

/// Grid used when a sweep names a variable but no values.
inline std::vector<double> default_grid(SweepVariable v) {
    switch (v) {
        case SweepVariable::HarvestSrc:
        case SweepVariable::HarvestDst: return {1, 2, 3, 4, 6, 8};
        case SweepVariable::ProbSrc:
        case SweepVariable::ProbDst: return {0.1, 0.3, 0.5, 0.7, 0.9};
        case SweepVariable::Horizon: return {10, 20, 50, 100};
    }
    return {};
}

struct ExperimentConfig {
    SystemParams params;
    std::vector<Algorithm> algorithms{Algorithm::FHJPA, Algorithm::GA, Algorithm::IHJPA};
    SweepVariable sweep_variable = SweepVariable::Horizon;
    std::vector<double> sweep_values{20};
    std::size_t episodes = 10000;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    EvalMode mode = EvalMode::Exact;
    std::string output = "results.csv";
    /// When false, plan_seconds is written as 0 so exact-mode output is byte-stable.
    bool record_plan_time = true;
};

/// Returns a copy of `base` with the sweep variable set to `value`.
inline SystemParams apply_sweep(const SystemParams& base, SweepVariable v, double value) {
    SystemParams p = base;
    auto as_int = [&](const char* what) {
        if (value != std::round(value) || value < 0 || value > 1e9) {
            throw ConfigError(std::string("sweep value for ") + what + " must be a nonnegative integer");
        }
        return static_cast<int>(value);
    };
    switch (v) {
        case SweepVariable::HarvestSrc: p.harvest_units_src = as_int("E_S"); break;
        case SweepVariable::HarvestDst: p.harvest_units_dst = as_int("E_D"); break;
        case SweepVariable::ProbSrc: p.harvest_prob_src = value; break;
        case SweepVariable::ProbDst: p.harvest_prob_dst = value; break;
        case SweepVariable::Horizon: p.horizon = as_int("K"); break;
    }
    validate(p);
    return p;
}

inline void validate(const ExperimentConfig& c) {
    validate(c.params);
    if (c.algorithms.empty()) throw ConfigError("run.algorithms must name at least one algorithm");
    if (c.sweep_values.empty()) throw ConfigError("run.sweep.values must not be empty");
    for (std::size_t i = 1; i < c.sweep_values.size(); ++i) {
        if (!(c.sweep_values[i] > c.sweep_values[i - 1])) {
            throw ConfigError("run.sweep.values must be strictly increasing");
        }
    }
    for (double v : c.sweep_values) (void)apply_sweep(c.params, c.sweep_variable, v);
    if (c.episodes < 1) throw ConfigError("run.episodes must be at least 1");
    if (c.workers < 1) throw ConfigError("run.workers must be at least 1");
}

namespace detail {

using nlohmann::json;

// Reads typed fields from a JSON object, reporting errors with their path and
// rejecting unknown keys.
class Reader {
public:
    Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    template <class T>
    void get(const std::string& key, T& out) {
        seen_.push_back(key);
        auto it = obj_.find(key);
        if (it == obj_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            throw ConfigError(path_ + "." + key + ": wrong type");
        }
    }

    const json* child(const std::string& key) {
        seen_.push_back(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    std::string path(const std::string& key) const { return path_ + "." + key; }

    void finish() const {
        for (const auto& [key, _] : obj_.items()) {
            if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
                throw ConfigError(path_ + "." + key + ": unknown field");
            }
        }
    }

private:
    const json& obj_;
    std::string path_;
    std::vector<std::string> seen_;
};

inline void read_pair(Reader& r, const std::string& key, auto& src, auto& dst) {
    if (const json* node = r.child(key)) {
        Reader sub(*node, r.path(key));
        sub.get("source", src);
        sub.get("destination", dst);
        sub.finish();
    }
}

inline void read_system(const json& node, SystemParams& p) {
    Reader r(node, "system");
    r.get("bandwidth_hz", p.bandwidth_hz);
    r.get("noise_psd_w_per_hz", p.noise_psd);
    r.get("sic_factor", p.sic_factor);
    r.get("slot_seconds", p.slot_seconds);
    r.get("energy_unit_joules", p.energy_unit_joules);
    read_pair(r, "harvest_units", p.harvest_units_src, p.harvest_units_dst);
    read_pair(r, "harvest_prob", p.harvest_prob_src, p.harvest_prob_dst);
    read_pair(r, "battery_cap", p.battery_cap_src, p.battery_cap_dst);
    r.get("power_levels_w", p.power_levels);

    // Shared channel description, optionally overridden per link.
    std::vector<double> levels = p.channels[0].levels;
    double stay = 0.9;
    r.get("gain_levels", levels);
    r.get("gain_stay_prob", stay);
    if (!(stay >= 0.0 && stay <= 1.0)) throw ConfigError("system.gain_stay_prob: must lie in [0, 1]");
    for (auto& ch : p.channels) ch = symmetric_channel(levels, stay);
    if (const json* links = r.child("links")) {
        Reader lr(*links, "system.links");
        for (std::size_t l = 0; l < kLinkCount; ++l) {
            const json* ln = lr.child(kLinkNames[l]);
            if (!ln) continue;
            Reader one(*ln, lr.path(kLinkNames[l]));
            std::vector<double> link_levels = levels;
            one.get("gain_levels", link_levels);
            double link_stay = stay;
            one.get("gain_stay_prob", link_stay);
            p.channels[l] = symmetric_channel(link_levels, link_stay);
            one.get("transition", p.channels[l].transition);
            one.finish();
        }
        lr.finish();
    }

    r.get("horizon", p.horizon);
    if (node.contains("discount")) {
        double discount = 0.0;
        r.get("discount", discount);
        p.discount = discount;
    } else {
        (void)r.child("discount");
    }

    // Default start: second gain level on every link, full batteries.
    for (std::size_t l = 0; l < kLinkCount; ++l) {
        p.initial_state.gain_idx[l] = std::min<std::size_t>(1, p.channels[l].levels.size() - 1);
    }
    p.initial_state.b_src = p.battery_cap_src;
    p.initial_state.b_dst = p.battery_cap_dst;
    if (const json* s0 = r.child("initial_state")) {
        Reader sr(*s0, "system.initial_state");
        std::vector<std::size_t> gains(p.initial_state.gain_idx.begin(), p.initial_state.gain_idx.end());
        sr.get("gain_idx", gains);
        if (gains.size() != kLinkCount) throw ConfigError("system.initial_state.gain_idx: expected 4 indices");
        std::copy(gains.begin(), gains.end(), p.initial_state.gain_idx.begin());
        sr.get("battery_src", p.initial_state.b_src);
        sr.get("battery_dst", p.initial_state.b_dst);
        sr.finish();
    }
    r.finish();
}

inline void read_run(const json& node, ExperimentConfig& c) {
    Reader r(node, "run");
    if (const json* algs = r.child("algorithms")) {
        std::vector<std::string> names;
        try {
            names = algs->get<std::vector<std::string>>();
        } catch (const json::exception&) {
            throw ConfigError("run.algorithms: expected a list of strings");
        }
        c.algorithms.clear();
        for (const auto& n : names) c.algorithms.push_back(parse_algorithm(n));
    }
    bool sweep_given = false;
    if (const json* sw = r.child("sweep")) {
        Reader sr(*sw, "run.sweep");
        std::string var = "K";
        sr.get("variable", var);
        c.sweep_variable = parse_sweep_variable(var);
        c.sweep_values = default_grid(c.sweep_variable);
        sr.get("values", c.sweep_values);
        sr.finish();
        sweep_given = true;
    }
    if (!sweep_given) c.sweep_values = {static_cast<double>(c.params.horizon)};
    std::int64_t episodes = static_cast<std::int64_t>(c.episodes);
    r.get("episodes", episodes);
    if (episodes < 1) throw ConfigError("run.episodes: must be at least 1");
    c.episodes = static_cast<std::size_t>(episodes);
    r.get("seed", c.seed);
    std::int64_t workers = c.workers;
    r.get("workers", workers);
    if (workers < 1) throw ConfigError("run.workers: must be at least 1");
    c.workers = static_cast<unsigned>(workers);
    std::string mode = to_string(c.mode);
    r.get("mode", mode);
    c.mode = parse_mode(mode);
    r.get("output", c.output);
    r.get("record_plan_time", c.record_plan_time);
    r.finish();
}

}  // namespace detail

/// Builds a validated config from parsed JSON; omitted fields keep their defaults.
inline ExperimentConfig config_from_json(const nlohmann::json& doc) {
    ExperimentConfig c;
    detail::Reader top(doc, "$");
    if (const auto* sys = top.child("system")) detail::read_system(*sys, c.params);
    if (const auto* run = top.child("run")) {
        detail::read_run(*run, c);
    } else {
        c.sweep_values = {static_cast<double>(c.params.horizon)};
    }
    top.finish();
    validate(c);
    return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(doc);
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

namespace detail {

// Rethrows the in-flight library error with `context` prefixed, keeping its type.
[[noreturn]] inline void rethrow_with_context(const std::string& context) {
    const std::string prefix = context + ": ";
    try {
        throw;
    } catch (const ParameterError& e) {
        throw ParameterError(prefix + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(prefix + e.what());
    } catch (const InfeasibleError& e) {
        throw InfeasibleError(prefix + e.what());
    } catch (const ArgumentError& e) {
        throw ArgumentError(prefix + e.what());
    } catch (const ShapeError& e) {
        throw ShapeError(prefix + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(prefix + e.what());
    } catch (const CoverageError& e) {
        throw CoverageError(prefix + e.what());
    } catch (const IoError& e) {
        throw IoError(prefix + e.what());
    }
}

}  // namespace detail

struct ResultRow {
    double sweep_value = 0.0;
    Algorithm algorithm = Algorithm::FHJPA;
    double avg_see = 0.0;            // bits/J
    double total_secure_bits = 0.0;  // bits
    std::uint64_t backup_count = 0;
    double plan_seconds = 0.0;
    EvalMode mode = EvalMode::Exact;
};

/// Plans one algorithm on an already built MDP. GA has no planning phase.
inline AnyPolicy plan(Algorithm alg, const Mdp& mdp, const SystemParams& params) {
    switch (alg) {
        case Algorithm::FHJPA: return plan_backward_induction(mdp.kernel, mdp.rewards, params.horizon);
        case Algorithm::GA: return greedy_policy(mdp.rewards);
        case Algorithm::IHJPA:
            return plan_policy_iteration(mdp.kernel, mdp.rewards,
                                         params.discount.value_or(horizon_to_discount(params.horizon)));
    }
    throw ArgumentError("unknown algorithm");
}

inline const PlanStats& stats_of(const AnyPolicy& p) {
    return std::visit([](const auto& x) -> const PlanStats& { return x.stats; }, p);
}

/// One row per (sweep value, algorithm), in grid order then config order.
/// IHJPA always uses discount 1 - 1/K at each sweep point.
inline std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
    validate(config);
    std::vector<ResultRow> rows;
    for (double value : config.sweep_values) {
        try {
            SystemParams params = apply_sweep(config.params, config.sweep_variable, value);
            params.discount.reset();
            const Mdp mdp = build_mdp(params);
            const StateIndex s0 = mdp.space.encode(params.initial_state);
            for (Algorithm alg : config.algorithms) {
                const AnyPolicy policy = plan(alg, mdp, params);
                const PlanStats& stats = stats_of(policy);
                ResultRow row;
                row.sweep_value = value;
                row.algorithm = alg;
                row.backup_count = stats.backups;
                row.plan_seconds = config.record_plan_time ? stats.plan_seconds : 0.0;
                row.mode = config.mode;
                const Metrics m = config.mode == EvalMode::Exact
                                      ? exact_evaluate(policy, mdp.kernel, mdp.rewards, params.horizon, s0)
                                      : monte_carlo_evaluate(policy, params, config.episodes, config.seed,
                                                             config.workers);
                row.avg_see = m.avg_see;
                row.total_secure_bits = m.total_secure_bits;
                rows.push_back(row);
            }
        } catch (...) {
            detail::rethrow_with_context(to_string(config.sweep_variable) + " = " + format_double(value));
        }
    }
    return rows;
}

inline constexpr const char* kResultsHeader =
    "sweep_value,algorithm,avg_see_bits_per_joule,total_secure_bits,backup_count,plan_seconds,mode";

inline void write_results(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << kResultsHeader << '\n';
    for (const auto& r : rows) {
        out << format_double(r.sweep_value) << ',' << to_string(r.algorithm) << ',' << format_double(r.avg_see) << ','
            << format_double(r.total_secure_bits) << ',' << r.backup_count << ',' << format_double(r.plan_seconds)
            << ',' << to_string(r.mode) << '\n';
    }
}

inline void write_results(const std::vector<ResultRow>& rows, const std::string& path) {
    if (rows.empty()) throw ArgumentError("no result rows to write");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_results(out, rows);
    out.flush();
    if (!out) throw IoError("failed writing '" + path + "'");
}

struct TimingEntry {
    int horizon = 0;
    Algorithm algorithm = Algorithm::FHJPA;
    PlanStats stats;
};

struct TimingReport {
    std::vector<TimingEntry> entries;
};

/// Planning cost of each algorithm at every horizon: the sweep grid when
/// sweeping K, otherwise the configured horizon.
inline TimingReport compare_timing(const ExperimentConfig& config) {
    validate(config);
    const auto has = [&](Algorithm a) {
        return std::find(config.algorithms.begin(), config.algorithms.end(), a) != config.algorithms.end();
    };
    if (!has(Algorithm::FHJPA) || !has(Algorithm::IHJPA)) {
        throw ConfigError("timing comparison needs both fhjpa and ihjpa in run.algorithms");
    }
    std::vector<int> horizons;
    if (config.sweep_variable == SweepVariable::Horizon) {
        for (double v : config.sweep_values) horizons.push_back(static_cast<int>(v));
    } else {
        horizons.push_back(config.params.horizon);
    }
    TimingReport report;
    SystemParams params = config.params;
    params.discount.reset();
    for (int k : horizons) {
        params.horizon = k;
        const Mdp mdp = build_mdp(params);
        for (Algorithm alg : config.algorithms) {
            try {
                report.entries.push_back({k, alg, stats_of(plan(alg, mdp, params))});
            } catch (...) {
                detail::rethrow_with_context("K = " + std::to_string(k));
            }
        }
    }
    return report;
}

inline std::string format_timing_report(const TimingReport& report) {
    std::ostringstream out;
    out << "K,algorithm,plan_seconds,backups,value_evaluations,iterations\n";
    std::map<int, std::map<Algorithm, double>> secs;
    for (const auto& e : report.entries) {
        out << e.horizon << ',' << to_string(e.algorithm) << ',' << format_double(e.stats.plan_seconds) << ','
            << e.stats.backups << ',' << e.stats.value_evaluations << ',' << e.stats.iterations << '\n';
        secs[e.horizon][e.algorithm] = e.stats.plan_seconds;
    }
    out << "# wall-clock ratios depend on hardware and are informational only\n";
    for (const auto& [k, by_alg] : secs) {
        auto fh = by_alg.find(Algorithm::FHJPA);
        auto ih = by_alg.find(Algorithm::IHJPA);
        if (fh == by_alg.end() || ih == by_alg.end() || ih->second <= 0.0) continue;
        out << "# K=" << k << ": fhjpa takes " << format_double(100.0 * (1.0 - fh->second / ih->second))
            << " percent less planning time than ihjpa\n";
    }
    return out.str();
}

}  // namespace seeplan
