#pragma once

// Finite state/action spaces, the factored transition kernel and the reward
// table of the power allocation MDP.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seeplan/model.hpp"

namespace seeplan {

using StateIndex = std::size_t;
using ActionIndex = std::size_t;

inline constexpr ActionIndex kNoAction = std::numeric_limits<ActionIndex>::max();

/// Dense bijection between State and [0, size()). Gain indices are the outer
/// coordinates (SD slowest), the two batteries the inner ones (destination fastest).
/// Actions are numbered ps-major: index = ps_idx * M + pd_idx.
class StateSpace {
public:
    explicit StateSpace(const SystemParams& params) {
        validate(params);
        for (std::size_t l = 0; l < kLinkCount; ++l) {
            levels_[l] = params.channels[l].levels.size();
        }
        cap_src_ = params.battery_cap_src;
        cap_dst_ = params.battery_cap_dst;
        power_levels_ = params.power_levels.size();

        std::array<std::size_t, kLinkCount + 2> extents{levels_[0], levels_[1], levels_[2], levels_[3],
                                                        static_cast<std::size_t>(cap_src_) + 1,
                                                        static_cast<std::size_t>(cap_dst_) + 1};
        std::size_t n = 1;
        for (std::size_t i = extents.size(); i-- > 0;) {
            strides_[i] = n;
            if (__builtin_mul_overflow(n, extents[i], &n)) {
                throw ConfigError("state space size overflows the index range");
            }
        }
        std::size_t pairs = 0;
        if (__builtin_mul_overflow(power_levels_, power_levels_, &actions_) ||
            __builtin_mul_overflow(n, actions_, &pairs)) {
            throw ConfigError("state-action space size overflows the index range");
        }
        size_ = n;
        for (double p : params.power_levels) {
            units_.push_back(power_to_units(p, params));
        }
    }

    std::size_t size() const { return size_; }
    std::size_t action_count() const { return actions_; }
    std::size_t power_level_count() const { return power_levels_; }
    std::size_t level_count(Link link) const { return levels_[static_cast<std::size_t>(link)]; }
    int cap_src() const { return cap_src_; }
    int cap_dst() const { return cap_dst_; }

    /// Energy units consumed per slot by each power level.
    const std::vector<int>& power_units() const { return units_; }

    bool contains(const State& s) const {
        for (std::size_t l = 0; l < kLinkCount; ++l) {
            if (s.gain_idx[l] >= levels_[l]) return false;
        }
        return s.b_src >= 0 && s.b_src <= cap_src_ && s.b_dst >= 0 && s.b_dst <= cap_dst_;
    }

    StateIndex encode(const State& s) const {
        if (!contains(s)) {
            throw ArgumentError("state outside the state space");
        }
        StateIndex idx = 0;
        for (std::size_t l = 0; l < kLinkCount; ++l) {
            idx += s.gain_idx[l] * strides_[l];
        }
        return idx + static_cast<std::size_t>(s.b_src) * strides_[4] + static_cast<std::size_t>(s.b_dst);
    }

    State decode(StateIndex idx) const {
        if (idx >= size_) {
            throw ArgumentError("state index " + std::to_string(idx) + " out of range");
        }
        State s;
        for (std::size_t l = 0; l < kLinkCount; ++l) {
            s.gain_idx[l] = idx / strides_[l];
            idx %= strides_[l];
        }
        s.b_src = static_cast<int>(idx / strides_[4]);
        s.b_dst = static_cast<int>(idx % strides_[4]);
        return s;
    }

    Action action(ActionIndex a) const { return {a / power_levels_, a % power_levels_}; }
    ActionIndex action_index(const Action& a) const { return a.ps_idx * power_levels_ + a.pd_idx; }

    /// Total energy units drained by an action.
    int consumed_units(ActionIndex a) const {
        const Action act = action(a);
        return units_[act.ps_idx] + units_[act.pd_idx];
    }

    bool feasible(const State& s, ActionIndex a) const {
        const Action act = action(a);
        return units_[act.ps_idx] <= s.b_src && units_[act.pd_idx] <= s.b_dst;
    }

private:
    std::array<std::size_t, kLinkCount> levels_{};
    std::array<std::size_t, kLinkCount + 2> strides_{};
    int cap_src_ = 0;
    int cap_dst_ = 0;
    std::size_t power_levels_ = 0;
    std::size_t actions_ = 0;
    std::size_t size_ = 0;
    std::vector<int> units_;
};

inline StateSpace enumerate_states(const SystemParams& params) { return StateSpace(params); }

/// Actions whose energy fits in both batteries, ps-major ascending. Always
/// contains the idle action (0, 0).
inline std::vector<Action> feasible_actions(const State& s, const SystemParams& params) {
    std::vector<int> units;
    units.reserve(params.power_levels.size());
    for (double p : params.power_levels) {
        units.push_back(power_to_units(p, params));
    }
    std::vector<Action> out;
    for (std::size_t i = 0; i < units.size(); ++i) {
        if (units[i] > s.b_src) continue;
        for (std::size_t j = 0; j < units.size(); ++j) {
            if (units[j] <= s.b_dst) out.push_back({i, j});
        }
    }
    return out;
}

namespace detail {

inline void check_action(const State& s, const Action& a, const SystemParams& params) {
    if (a.ps_idx >= params.power_levels.size() || a.pd_idx >= params.power_levels.size()) {
        throw ArgumentError("action index outside the power level set");
    }
    if (power_to_units(params.power_levels[a.ps_idx], params) > s.b_src ||
        power_to_units(params.power_levels[a.pd_idx], params) > s.b_dst) {
        throw InfeasibleError("action is not feasible in the given state");
    }
}

struct BatteryOutcome {
    int level;
    double probability;
};

// Next battery levels of one node with merged harvest branches and no
// zero-mass entries, ascending by level.
inline std::vector<BatteryOutcome> battery_outcomes(int b, int consumed, int harvest_units, double harvest_prob,
                                                    int cap) {
    std::vector<BatteryOutcome> out;
    auto add = [&out](int level, double prob) {
        if (prob <= 0.0) return;
        for (auto& o : out) {
            if (o.level == level) {
                o.probability += prob;
                return;
            }
        }
        out.push_back({level, prob});
    };
    add(battery_next(b, consumed, 0, cap), 1.0 - harvest_prob);
    add(battery_next(b, consumed, harvest_units, cap), harvest_prob);
    if (out.size() == 2 && out[0].level > out[1].level) std::swap(out[0], out[1]);
    return out;
}

}  // namespace detail

/// P[s_next | s, a]: product of the four channel factors and, per node, the
/// harvest-weighted indicator that the battery update lands on s_next.
inline double transition_prob(const State& s, const Action& a, const State& s_next, const SystemParams& params) {
    detail::check_action(s, a, params);
    double prob = 1.0;
    for (std::size_t l = 0; l < kLinkCount; ++l) {
        prob *= params.channels[l].transition.at(s.gain_idx[l]).at(s_next.gain_idx[l]);
    }
    const int used_src = power_to_units(params.power_levels[a.ps_idx], params);
    const int used_dst = power_to_units(params.power_levels[a.pd_idx], params);

    auto node_factor = [](int b, int used, int harvest, double p, int cap, int b_next) {
        double f = 0.0;
        if (battery_next(b, used, harvest, cap) == b_next) f += p;
        if (battery_next(b, used, 0, cap) == b_next) f += 1.0 - p;
        return f;
    };
    prob *= node_factor(s.b_src, used_src, params.harvest_units_src, params.harvest_prob_src, params.battery_cap_src,
                        s_next.b_src);
    prob *= node_factor(s.b_dst, used_dst, params.harvest_units_dst, params.harvest_prob_dst, params.battery_cap_dst,
                        s_next.b_dst);
    return prob;
}

struct Successor {
    State state;
    double probability = 0.0;
};

/// Sparse row of the kernel: every next state with positive mass.
inline std::vector<Successor> successor_distribution(const State& s, const Action& a, const SystemParams& params) {
    detail::check_action(s, a, params);
    const auto src = detail::battery_outcomes(s.b_src, power_to_units(params.power_levels[a.ps_idx], params),
                                              params.harvest_units_src, params.harvest_prob_src,
                                              params.battery_cap_src);
    const auto dst = detail::battery_outcomes(s.b_dst, power_to_units(params.power_levels[a.pd_idx], params),
                                              params.harvest_units_dst, params.harvest_prob_dst,
                                              params.battery_cap_dst);

    std::vector<Successor> out;
    State next;
    auto recurse = [&](auto&& self, std::size_t link, double prob) -> void {
        if (link == kLinkCount) {
            for (const auto& bs : src) {
                for (const auto& bd : dst) {
                    next.b_src = bs.level;
                    next.b_dst = bd.level;
                    out.push_back({next, prob * bs.probability * bd.probability});
                }
            }
            return;
        }
        const auto& row = params.channels[link].transition.at(s.gain_idx[link]);
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (row[j] <= 0.0) continue;
            next.gain_idx[link] = j;
            self(self, link + 1, prob * row[j]);
        }
    };
    recurse(recurse, 0, 1.0);
    return out;
}

/// One nonzero of a kernel row.
struct Transition {
    StateIndex next;
    double probability;
};

/// Sparse P[s' | s, a] for every (state, action) pair, compressed row storage.
/// Rows of infeasible pairs are empty.
class TransitionKernel {
public:
    TransitionKernel() = default;

    TransitionKernel(std::size_t states, std::size_t actions, std::vector<std::size_t> row_offsets,
                     std::vector<Transition> entries)
        : states_(states), actions_(actions), offsets_(std::move(row_offsets)), entries_(std::move(entries)) {
        if (offsets_.size() != states_ * actions_ + 1 || offsets_.back() != entries_.size()) {
            throw ShapeError("kernel row offsets do not match its dimensions");
        }
    }

    std::size_t state_count() const { return states_; }
    std::size_t action_count() const { return actions_; }
    std::size_t nonzeros() const { return entries_.size(); }

    std::span<const Transition> row(StateIndex s, ActionIndex a) const {
        const std::size_t r = s * actions_ + a;
        return {entries_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
    }

    bool has_row(StateIndex s, ActionIndex a) const { return !row(s, a).empty(); }

private:
    std::size_t states_ = 0;
    std::size_t actions_ = 0;
    std::vector<std::size_t> offsets_{0};
    std::vector<Transition> entries_;
};

inline TransitionKernel build_kernel(const StateSpace& space, const SystemParams& params) {
    const std::size_t n = space.size();
    const std::size_t m = space.action_count();
    std::vector<std::size_t> offsets;
    offsets.reserve(n * m + 1);
    offsets.push_back(0);
    std::vector<Transition> entries;
    for (StateIndex s = 0; s < n; ++s) {
        const State state = space.decode(s);
        for (ActionIndex a = 0; a < m; ++a) {
            if (space.feasible(state, a)) {
                for (const auto& succ : successor_distribution(state, space.action(a), params)) {
                    entries.push_back({space.encode(succ.state), succ.probability});
                }
            }
            offsets.push_back(entries.size());
        }
    }
    return TransitionKernel(n, m, std::move(offsets), std::move(entries));
}

/// Per-(state, action) reward in bits/J and secure bits per slot, plus the
/// per-action energy cost used for tie-breaking. Infeasible pairs are flagged.
class RewardTable {
public:
    RewardTable() = default;

    RewardTable(std::size_t states, std::size_t actions, std::vector<std::uint8_t> feasible,
                std::vector<double> reward, std::vector<double> secure_bits, std::vector<int> consumed)
        : states_(states),
          actions_(actions),
          feasible_(std::move(feasible)),
          reward_(std::move(reward)),
          secure_bits_(std::move(secure_bits)),
          consumed_(std::move(consumed)) {
        const std::size_t cells = states_ * actions_;
        if (feasible_.size() != cells || reward_.size() != cells || secure_bits_.size() != cells ||
            consumed_.size() != actions_) {
            throw ShapeError("reward table columns do not match its dimensions");
        }
    }

    std::size_t state_count() const { return states_; }
    std::size_t action_count() const { return actions_; }

    bool feasible(StateIndex s, ActionIndex a) const { return feasible_[s * actions_ + a] != 0; }
    double reward(StateIndex s, ActionIndex a) const { return reward_[s * actions_ + a]; }
    /// C_S * T_s for the slot.
    double secure_bits(StateIndex s, ActionIndex a) const { return secure_bits_[s * actions_ + a]; }
    int consumed_units(ActionIndex a) const { return consumed_[a]; }

private:
    std::size_t states_ = 0;
    std::size_t actions_ = 0;
    std::vector<std::uint8_t> feasible_;
    std::vector<double> reward_;
    std::vector<double> secure_bits_;
    std::vector<int> consumed_;
};

inline RewardTable build_reward_table(const StateSpace& space, const SystemParams& params) {
    const std::size_t n = space.size();
    const std::size_t m = space.action_count();
    std::vector<std::uint8_t> feasible(n * m, 0);
    std::vector<double> reward(n * m, 0.0);
    std::vector<double> bits(n * m, 0.0);
    std::vector<int> consumed(m);
    for (ActionIndex a = 0; a < m; ++a) consumed[a] = space.consumed_units(a);

    for (StateIndex s = 0; s < n; ++s) {
        const State state = space.decode(s);
        const LinkGains gains = gains_of(state, params);
        for (ActionIndex a = 0; a < m; ++a) {
            if (!space.feasible(state, a)) continue;
            const Action act = space.action(a);
            const double ps = params.power_levels[act.ps_idx];
            const double pd = params.power_levels[act.pd_idx];
            feasible[s * m + a] = 1;
            reward[s * m + a] = immediate_reward(gains, ps, pd, params);
            bits[s * m + a] = secrecy_rate(gains, ps, pd, params) * params.slot_seconds;
        }
    }
    return RewardTable(n, m, std::move(feasible), std::move(reward), std::move(bits), std::move(consumed));
}

/// Kernel and reward table built together over one state space.
struct Mdp {
    StateSpace space;
    TransitionKernel kernel;
    RewardTable rewards;
};

inline Mdp build_mdp(const SystemParams& params) {
    StateSpace space(params);
    TransitionKernel kernel = build_kernel(space, params);
    RewardTable rewards = build_reward_table(space, params);
    return {std::move(space), std::move(kernel), std::move(rewards)};
}

}  // namespace seeplan
