#pragma once

// Policy evaluation: seeded Monte Carlo transmission-phase episodes and an
// exact forward propagation of the state distribution.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <exception>
#include <tuple>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <thread>
#include <variant>
#include <vector>

#include "seeplan/format.hpp"
#include "seeplan/mdp.hpp"
#include "seeplan/planners.hpp"
#include "seeplan/policy_io.hpp"

namespace seeplan {

template <class P>
concept LookupPolicy = requires(const P& p, std::size_t stage, StateIndex s) {
    { p.action_at(stage, s) } -> std::same_as<std::optional<ActionIndex>>;
};

struct SlotRecord {
    std::size_t k = 0;
    State state;
    Action action;
    double secrecy_rate = 0.0;  // bps
    double reward = 0.0;        // bits/J
    int harvest_src = 0;        // units harvested during the slot
    int harvest_dst = 0;
};

struct EpisodeTrace {
    std::vector<SlotRecord> slots;
    double secure_bits = 0.0;  // sum of C_S * T_s
    double total_reward = 0.0;

    double avg_see() const { return slots.empty() ? 0.0 : total_reward / static_cast<double>(slots.size()); }
};

/// Average SEE (bits/J) and expected total secure bits over K slots. Standard
/// errors are only present for Monte Carlo estimates.
struct Metrics {
    double avg_see = 0.0;
    double total_secure_bits = 0.0;
    std::optional<double> avg_see_stderr;
    std::optional<double> total_secure_bits_stderr;
    std::size_t episodes = 0;
};

/// Seed of episode `index` derived from the master seed (splitmix64 finalizer
/// over a counter), so every episode draws from its own stream.
inline std::uint64_t episode_seed(std::uint64_t master_seed, std::uint64_t index) {
    std::uint64_t z = master_seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace detail {

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::size_t sample_row(const std::vector<double>& row, std::mt19937_64& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
        if (row[j] <= 0.0) continue;
        acc += row[j];
        last = j;
        if (u < acc) return j;
    }
    return last;
}

template <LookupPolicy Policy>
ActionIndex lookup(const Policy& policy, std::size_t stage, StateIndex s) {
    auto a = policy.action_at(stage, s);
    if (!a) {
        throw CoverageError("policy has no action for stage " + std::to_string(stage) + ", state " +
                            std::to_string(s));
    }
    return *a;
}

}  // namespace detail

/// One K-slot transmission phase from params.initial_state. Per slot: look up
/// the action, accrue the reward, draw both harvests and the next channel
/// levels, then update the batteries (harvest only usable from the next slot).
template <LookupPolicy Policy>
EpisodeTrace run_episode(const Policy& policy, const SystemParams& params, std::uint64_t seed) {
    const StateSpace space(params);
    std::mt19937_64 rng(seed);
    EpisodeTrace trace;
    trace.slots.reserve(static_cast<std::size_t>(params.horizon));

    State state = params.initial_state;
    for (std::size_t k = 0; k < static_cast<std::size_t>(params.horizon); ++k) {
        const StateIndex s = space.encode(state);
        const ActionIndex a = detail::lookup(policy, k, s);
        if (a >= space.action_count() || !space.feasible(state, a)) {
            throw CoverageError("policy action at stage " + std::to_string(k) + " is infeasible in state " +
                                std::to_string(s));
        }
        SlotRecord rec;
        rec.k = k;
        rec.state = state;
        rec.action = space.action(a);
        const double ps = params.power_levels[rec.action.ps_idx];
        const double pd = params.power_levels[rec.action.pd_idx];
        const LinkGains gains = gains_of(state, params);
        rec.secrecy_rate = secrecy_rate(gains, ps, pd, params);
        rec.reward = immediate_reward(gains, ps, pd, params);

        rec.harvest_src = detail::uniform01(rng) < params.harvest_prob_src ? params.harvest_units_src : 0;
        rec.harvest_dst = detail::uniform01(rng) < params.harvest_prob_dst ? params.harvest_units_dst : 0;
        State next;
        for (std::size_t l = 0; l < kLinkCount; ++l) {
            next.gain_idx[l] = detail::sample_row(params.channels[l].transition[state.gain_idx[l]], rng);
        }
        const auto& units = space.power_units();
        next.b_src = battery_next(state.b_src, units[rec.action.ps_idx], rec.harvest_src, params.battery_cap_src);
        next.b_dst = battery_next(state.b_dst, units[rec.action.pd_idx], rec.harvest_dst, params.battery_cap_dst);

        trace.secure_bits += rec.secrecy_rate * params.slot_seconds;
        trace.total_reward += rec.reward;
        trace.slots.push_back(rec);
        state = next;
    }
    return trace;
}

/// Mean over `episodes` seeded episodes. Per-episode results are reduced in
/// episode order, so the output does not depend on `workers`.
template <LookupPolicy Policy>
Metrics monte_carlo_evaluate(const Policy& policy, const SystemParams& params, std::size_t episodes,
                             std::uint64_t master_seed, unsigned workers = 1) {
    if (episodes < 1) throw ArgumentError("episodes must be at least 1");
    (void)StateSpace(params);
    std::vector<double> see(episodes, 0.0);
    std::vector<double> bits(episodes, 0.0);
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(episodes)));

    auto work = [&](unsigned w) {
        for (std::size_t e = w; e < episodes; e += workers) {
            const EpisodeTrace t = run_episode(policy, params, episode_seed(master_seed, e));
            see[e] = t.avg_see();
            bits[e] = t.secure_bits;
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    work(w);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        pool.clear();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    // Accumulate deviations from the first episode so identical episodes give
    // an exact mean and a zero standard error.
    auto mean_and_stderr = [episodes](const std::vector<double>& xs) {
        const double shift = xs.front();
        double sum = 0.0;
        for (double x : xs) sum += x - shift;
        const double mean = shift + sum / static_cast<double>(episodes);
        if (episodes < 2) return std::pair{mean, 0.0};
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        const double var = ss / static_cast<double>(episodes - 1);
        return std::pair{mean, std::sqrt(var / static_cast<double>(episodes))};
    };
    Metrics m;
    std::tie(m.avg_see, m.avg_see_stderr.emplace()) = mean_and_stderr(see);
    std::tie(m.total_secure_bits, m.total_secure_bits_stderr.emplace()) = mean_and_stderr(bits);
    m.episodes = episodes;
    return m;
}

/// Stage-by-stage expectations under a policy, from exact propagation.
struct StageProfile {
    std::vector<double> mass;             // total probability at each stage
    std::vector<double> expected_reward;  // E[reward_k]
    std::vector<double> expected_bits;    // E[C_S * T_s] in slot k
};

template <LookupPolicy Policy>
StageProfile exact_profile(const Policy& policy, const TransitionKernel& kernel, const RewardTable& rewards,
                           int horizon, StateIndex initial) {
    if (horizon < 1) throw ArgumentError("horizon must be at least 1");
    detail::check_shapes(kernel, rewards);
    const std::size_t n = rewards.state_count();
    if (initial >= n) throw ArgumentError("initial state index out of range");

    StageProfile out;
    std::vector<double> dist(n, 0.0);
    std::vector<double> next(n, 0.0);
    dist[initial] = 1.0;
    for (std::size_t k = 0; k < static_cast<std::size_t>(horizon); ++k) {
        double mass = 0.0;
        double reward = 0.0;
        double bits = 0.0;
        std::fill(next.begin(), next.end(), 0.0);
        for (StateIndex s = 0; s < n; ++s) {
            if (dist[s] == 0.0) continue;
            const ActionIndex a = detail::lookup(policy, k, s);
            if (a >= rewards.action_count() || !rewards.feasible(s, a)) {
                throw CoverageError("policy action at stage " + std::to_string(k) + " is infeasible in state " +
                                    std::to_string(s));
            }
            mass += dist[s];
            reward += dist[s] * rewards.reward(s, a);
            bits += dist[s] * rewards.secure_bits(s, a);
            for (const auto& t : kernel.row(s, a)) next[t.next] += dist[s] * t.probability;
        }
        out.mass.push_back(mass);
        out.expected_reward.push_back(reward);
        out.expected_bits.push_back(bits);
        std::swap(dist, next);
    }
    return out;
}

/// Exact average SEE and expected secure bits over `horizon` slots.
template <LookupPolicy Policy>
Metrics exact_evaluate(const Policy& policy, const TransitionKernel& kernel, const RewardTable& rewards,
                       int horizon, StateIndex initial) {
    const StageProfile profile = exact_profile(policy, kernel, rewards, horizon, initial);
    Metrics m;
    for (double r : profile.expected_reward) m.avg_see += r;
    for (double b : profile.expected_bits) m.total_secure_bits += b;
    m.avg_see /= static_cast<double>(horizon);
    return m;
}

/// Exact metrics when the number of slots is geometric with mean 1 / (1 - discount):
/// P[K = n] = (1 - discount) discount^(n-1). Requires a policy defined at every stage.
template <LookupPolicy Policy>
Metrics exact_evaluate_geometric(const Policy& policy, const TransitionKernel& kernel, const RewardTable& rewards,
                                 double discount, StateIndex initial) {
    if (!(discount > 0.0 && discount < 1.0)) throw ArgumentError("discount must lie in (0, 1)");
    detail::check_shapes(kernel, rewards);
    const std::size_t n = rewards.state_count();
    if (initial >= n) throw ArgumentError("initial state index out of range");

    std::vector<double> dist(n, 0.0);
    std::vector<double> next(n, 0.0);
    dist[initial] = 1.0;
    Metrics m;
    double survive = 1.0;  // P[K > k]
    double cumulative_reward = 0.0;
    for (std::size_t k = 0; survive > 1e-16; ++k) {
        double reward = 0.0;
        double bits = 0.0;
        std::fill(next.begin(), next.end(), 0.0);
        for (StateIndex s = 0; s < n; ++s) {
            if (dist[s] == 0.0) continue;
            const ActionIndex a = detail::lookup(policy, k, s);
            if (a >= rewards.action_count() || !rewards.feasible(s, a)) {
                throw CoverageError("policy action is infeasible in state " + std::to_string(s));
            }
            reward += dist[s] * rewards.reward(s, a);
            bits += dist[s] * rewards.secure_bits(s, a);
            for (const auto& t : kernel.row(s, a)) next[t.next] += dist[s] * t.probability;
        }
        m.total_secure_bits += survive * bits;
        cumulative_reward += reward;
        // K = k + 1 with probability survive * (1 - discount).
        m.avg_see += survive * (1.0 - discount) * cumulative_reward / static_cast<double>(k + 1);
        survive *= discount;
        std::swap(dist, next);
    }
    return m;
}

/// Delimited text dump of a trace, one line per slot.
inline void write_trace(std::ostream& out, const EpisodeTrace& trace) {
    out << "k,g_sd,g_se,g_dd,g_de,b_src,b_dst,ps_idx,pd_idx,secrecy_rate_bps,reward_bits_per_joule,harvest_src,"
           "harvest_dst\n";
    for (const auto& r : trace.slots) {
        out << r.k;
        for (auto g : r.state.gain_idx) out << ',' << g;
        out << ',' << r.state.b_src << ',' << r.state.b_dst << ',' << r.action.ps_idx << ',' << r.action.pd_idx << ','
            << format_double(r.secrecy_rate) << ',' << format_double(r.reward) << ',' << r.harvest_src << ','
            << r.harvest_dst << '\n';
    }
}

// Type-erased entry points for policies loaded from file.

inline Metrics monte_carlo_evaluate(const AnyPolicy& policy, const SystemParams& params, std::size_t episodes,
                                    std::uint64_t master_seed, unsigned workers = 1) {
    return std::visit([&](const auto& p) { return monte_carlo_evaluate(p, params, episodes, master_seed, workers); },
                      policy);
}

inline Metrics exact_evaluate(const AnyPolicy& policy, const TransitionKernel& kernel, const RewardTable& rewards,
                              int horizon, StateIndex initial) {
    return std::visit([&](const auto& p) { return exact_evaluate(p, kernel, rewards, horizon, initial); }, policy);
}

}  // namespace seeplan
