#pragma once

// Look-up-table planners: finite-horizon backward induction, the greedy
// one-slot rule, and discounted policy iteration.

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "seeplan/mdp.hpp"

namespace seeplan {

/// Operation counters for one planning run.
///  - value_evaluations: Q(s, a) values computed
///  - backups: multiply-adds against a successor value (one per kernel entry touched)
///  - iterations: stages for backward induction, improvement rounds for policy iteration
struct PlanStats {
    std::uint64_t value_evaluations = 0;
    std::uint64_t backups = 0;
    std::uint64_t iterations = 0;
    double plan_seconds = 0.0;
};

/// Stage-indexed policy and stage values, K x N_S.
class NonstationaryPolicy {
public:
    NonstationaryPolicy() = default;
    NonstationaryPolicy(std::size_t stages, std::size_t states, std::size_t actions)
        : stages_(stages), states_(states), actions_(actions),
          table_(stages * states, kNoAction), values_(stages * states, 0.0) {}

    std::size_t stages() const { return stages_; }
    std::size_t state_count() const { return states_; }
    std::size_t action_count() const { return actions_; }

    std::optional<ActionIndex> action_at(std::size_t stage, StateIndex s) const {
        if (stage >= stages_ || s >= states_) return std::nullopt;
        const ActionIndex a = table_[stage * states_ + s];
        if (a == kNoAction) return std::nullopt;
        return a;
    }
    double value(std::size_t stage, StateIndex s) const { return values_.at(stage * states_ + s); }

    void set(std::size_t stage, StateIndex s, ActionIndex a, double v) {
        table_.at(stage * states_ + s) = a;
        values_.at(stage * states_ + s) = v;
    }

    PlanStats stats;

private:
    std::size_t stages_ = 0;
    std::size_t states_ = 0;
    std::size_t actions_ = 0;
    std::vector<ActionIndex> table_;
    std::vector<double> values_;
};

/// Same action at every stage.
class StationaryPolicy {
public:
    StationaryPolicy() = default;
    StationaryPolicy(std::size_t states, std::size_t actions)
        : states_(states), actions_(actions), table_(states, kNoAction), values_(states, 0.0) {}

    std::size_t state_count() const { return states_; }
    std::size_t action_count() const { return actions_; }

    std::optional<ActionIndex> action_at(std::size_t /*stage*/, StateIndex s) const {
        if (s >= states_ || table_[s] == kNoAction) return std::nullopt;
        return table_[s];
    }
    ActionIndex action(StateIndex s) const { return table_.at(s); }
    double value(StateIndex s) const { return values_.at(s); }
    const std::vector<ActionIndex>& actions() const { return table_; }
    const std::vector<double>& values() const { return values_; }

    void set(StateIndex s, ActionIndex a, double v) {
        table_.at(s) = a;
        values_.at(s) = v;
    }
    void set_values(std::vector<double> v) { values_ = std::move(v); }

    PlanStats stats;

private:
    std::size_t states_ = 0;
    std::size_t actions_ = 0;
    std::vector<ActionIndex> table_;
    std::vector<double> values_;
};

/// Relative tolerance under which two Q values count as tied.
inline constexpr double kTieTolerance = 1e-12;

namespace detail {

inline bool tied(double a, double b) {
    return std::abs(a - b) <= kTieTolerance * std::max(std::abs(a), std::abs(b));
}

// Picks among feasible actions: largest q, then fewest consumed units, then
// smallest index. q_of(a) is only called for feasible a.
template <class QFn>
std::pair<ActionIndex, double> select_action(const RewardTable& rewards, StateIndex s, QFn&& q_of) {
    const std::size_t m = rewards.action_count();
    std::vector<double> q(m, 0.0);
    double best = -std::numeric_limits<double>::infinity();
    for (ActionIndex a = 0; a < m; ++a) {
        if (!rewards.feasible(s, a)) continue;
        q[a] = q_of(a);
        best = std::max(best, q[a]);
    }
    ActionIndex chosen = kNoAction;
    for (ActionIndex a = 0; a < m; ++a) {
        if (!rewards.feasible(s, a) || !tied(q[a], best)) continue;
        if (chosen == kNoAction || rewards.consumed_units(a) < rewards.consumed_units(chosen)) {
            chosen = a;
        }
    }
    if (chosen == kNoAction) {
        throw ArgumentError("state " + std::to_string(s) + " has no feasible action");
    }
    return {chosen, q[chosen]};
}

inline void check_shapes(const TransitionKernel& kernel, const RewardTable& rewards) {
    if (kernel.state_count() != rewards.state_count() || kernel.action_count() != rewards.action_count()) {
        throw ShapeError("kernel and reward table are over different spaces");
    }
}

inline double expected_next(std::span<const Transition> row, const std::vector<double>& v, PlanStats& stats) {
    double acc = 0.0;
    for (const auto& t : row) acc += t.probability * v[t.next];
    stats.backups += row.size();
    return acc;
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace detail

/// Finite-horizon backward induction over K slots. Stage K-1 maximizes the
/// immediate reward alone; every earlier stage adds the expected value of
/// the following stage.
inline NonstationaryPolicy plan_backward_induction(const TransitionKernel& kernel, const RewardTable& rewards,
                                                   int horizon) {
    if (horizon < 1) throw ArgumentError("horizon must be at least 1");
    detail::check_shapes(kernel, rewards);
    detail::Stopwatch clock;

    const std::size_t n = rewards.state_count();
    const auto stages = static_cast<std::size_t>(horizon);
    NonstationaryPolicy policy(stages, n, rewards.action_count());
    PlanStats& stats = policy.stats;

    std::vector<double> next_value(n, 0.0);
    std::vector<double> value(n, 0.0);
    for (std::size_t k = stages; k-- > 0;) {
        const bool terminal = k + 1 == stages;
        for (StateIndex s = 0; s < n; ++s) {
            auto [a, v] = detail::select_action(rewards, s, [&](ActionIndex act) {
                ++stats.value_evaluations;
                if (terminal) return rewards.reward(s, act);
                return rewards.reward(s, act) + detail::expected_next(kernel.row(s, act), next_value, stats);
            });
            policy.set(k, s, a, v);
            value[s] = v;
        }
        std::swap(value, next_value);
        ++stats.iterations;
    }
    stats.plan_seconds = clock.seconds();
    return policy;
}

/// Action maximizing the immediate reward (shared tie rule).
inline ActionIndex greedy_action(StateIndex s, const RewardTable& rewards) {
    return detail::select_action(rewards, s, [&](ActionIndex a) { return rewards.reward(s, a); }).first;
}

inline ActionIndex greedy_action(const State& s, const StateSpace& space, const RewardTable& rewards) {
    return greedy_action(space.encode(s), rewards);
}

/// The greedy rule as a stationary table; values hold the immediate reward.
/// There is no planning phase, so stats stay zero.
inline StationaryPolicy greedy_policy(const RewardTable& rewards) {
    StationaryPolicy policy(rewards.state_count(), rewards.action_count());
    for (StateIndex s = 0; s < rewards.state_count(); ++s) {
        const ActionIndex a = greedy_action(s, rewards);
        policy.set(s, a, rewards.reward(s, a));
    }
    return policy;
}

inline double horizon_to_discount(int horizon) {
    if (horizon < 2) throw ArgumentError("horizon must be at least 2 to map onto a discount in (0, 1)");
    return 1.0 - 1.0 / static_cast<double>(horizon);
}

/// Solves V = R_pi + discount * P_pi V exactly.
inline std::vector<double> evaluate_stationary(const TransitionKernel& kernel, const RewardTable& rewards,
                                               const std::vector<ActionIndex>& actions, double discount,
                                               PlanStats* stats = nullptr) {
    detail::check_shapes(kernel, rewards);
    const auto n = static_cast<Eigen::Index>(rewards.state_count());
    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::VectorXd rhs(n);
    for (Eigen::Index s = 0; s < n; ++s) {
        const auto st = static_cast<StateIndex>(s);
        const ActionIndex a = actions.at(st);
        if (a == kNoAction || !rewards.feasible(st, a)) {
            throw CoverageError("policy has no feasible action for state " + std::to_string(st));
        }
        rhs[s] = rewards.reward(st, a);
        triplets.emplace_back(s, s, 1.0);
        for (const auto& t : kernel.row(st, a)) {
            triplets.emplace_back(s, static_cast<Eigen::Index>(t.next), -discount * t.probability);
        }
        if (stats) stats->backups += kernel.row(st, a).size();
    }
    Eigen::SparseMatrix<double> system(n, n);
    system.setFromTriplets(triplets.begin(), triplets.end());
    system.makeCompressed();

    Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
    solver.compute(system);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("policy evaluation: factorization failed");
    }
    Eigen::VectorXd v = solver.solve(rhs);
    if (solver.info() != Eigen::Success || !v.allFinite()) {
        throw NumericalError("policy evaluation: solve failed");
    }
    return {v.data(), v.data() + v.size()};
}

/// max over states of |max_a [R + discount * P V] - V|.
inline double bellman_residual(const TransitionKernel& kernel, const RewardTable& rewards, double discount,
                               const std::vector<double>& value) {
    double worst = 0.0;
    for (StateIndex s = 0; s < rewards.state_count(); ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (ActionIndex a = 0; a < rewards.action_count(); ++a) {
            if (!rewards.feasible(s, a)) continue;
            double acc = rewards.reward(s, a);
            for (const auto& t : kernel.row(s, a)) acc += discount * t.probability * value[t.next];
            best = std::max(best, acc);
        }
        worst = std::max(worst, std::abs(best - value[s]));
    }
    return worst;
}

inline constexpr int kMaxPolicyIterations = 1000;

/// Discounted policy iteration started from the greedy policy. The current
/// action is kept whenever it ties the best one, so the loop stops as soon as
/// no state can strictly improve.
inline StationaryPolicy plan_policy_iteration(const TransitionKernel& kernel, const RewardTable& rewards,
                                              double discount) {
    if (!(discount > 0.0 && discount < 1.0)) throw ArgumentError("discount must lie in (0, 1)");
    detail::check_shapes(kernel, rewards);
    detail::Stopwatch clock;

    StationaryPolicy policy = greedy_policy(rewards);
    PlanStats& stats = policy.stats;
    std::vector<ActionIndex> actions = policy.actions();

    for (;;) {
        if (stats.iterations >= static_cast<std::uint64_t>(kMaxPolicyIterations)) {
            throw NumericalError("policy iteration did not converge within " +
                                 std::to_string(kMaxPolicyIterations) + " iterations");
        }
        ++stats.iterations;
        const std::vector<double> value = evaluate_stationary(kernel, rewards, actions, discount, &stats);

        bool changed = false;
        for (StateIndex s = 0; s < rewards.state_count(); ++s) {
            const ActionIndex current = actions[s];
            double current_q = 0.0;
            auto [a, q] = detail::select_action(rewards, s, [&](ActionIndex act) {
                ++stats.value_evaluations;
                const double v = rewards.reward(s, act) +
                                 discount * detail::expected_next(kernel.row(s, act), value, stats);
                if (act == current) current_q = v;
                return v;
            });
            if (a != current && !detail::tied(q, current_q)) {
                actions[s] = a;
                changed = true;
            }
        }
        if (!changed) {
            for (StateIndex s = 0; s < rewards.state_count(); ++s) policy.set(s, actions[s], value[s]);
            break;
        }
    }
    stats.plan_seconds = clock.seconds();
    return policy;
}

}  // namespace seeplan
