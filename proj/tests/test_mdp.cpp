#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "oracles.hpp"
#include "seeplan/mdp.hpp"

using namespace seeplan;

TEST(StateSpace, Sizes) {
    SystemParams p;
    EXPECT_EQ(StateSpace(p).size(), 576u);
    EXPECT_EQ(StateSpace(p).action_count(), 16u);

    SystemParams one = oracle::tiny_params();
    one.battery_cap_src = one.battery_cap_dst = 0;
    one.initial_state.b_src = one.initial_state.b_dst = 0;
    EXPECT_EQ(StateSpace(one).size(), 1u);

    SystemParams q;
    q.battery_cap_src = 1;
    q.battery_cap_dst = 0;
    q.initial_state.b_src = 1;
    q.initial_state.b_dst = 0;
    EXPECT_EQ(StateSpace(q).size(), 32u);
}

TEST(StateSpace, EncodeDecodeIsABijection) {
    SystemParams p;
    p.channels[1] = symmetric_channel({1e-13, 2e-13, 3e-13}, 0.5);
    const StateSpace space(p);
    ASSERT_EQ(space.size(), 2u * 3u * 2u * 2u * 36u);
    for (StateIndex i = 0; i < space.size(); ++i) {
        EXPECT_EQ(space.encode(space.decode(i)), i);
    }
    // Gains outer, batteries inner: consecutive indices first walk b_dst.
    EXPECT_EQ(space.decode(1).b_dst, 1);
    EXPECT_EQ(space.decode(6).b_src, 1);
    EXPECT_THROW(space.decode(space.size()), ArgumentError);
    EXPECT_THROW(space.encode(State{{0, 3, 0, 0}, 0, 0}), ArgumentError);
}

TEST(StateSpace, OverflowIsAConfigError) {
    SystemParams p;
    p.battery_cap_src = 2'000'000'000;
    p.battery_cap_dst = 2'000'000'000;
    EXPECT_THROW(StateSpace{p}, ConfigError);
}

TEST(FeasibleActions, Examples) {
    SystemParams p;
    auto empty = feasible_actions(State{{1, 1, 1, 1}, 0, 0}, p);
    ASSERT_EQ(empty.size(), 1u);
    EXPECT_EQ(empty[0], (Action{0, 0}));

    EXPECT_EQ(feasible_actions(State{{1, 1, 1, 1}, 5, 5}, p).size(), 16u);

    auto one = feasible_actions(State{{1, 1, 1, 1}, 1, 0}, p);
    ASSERT_EQ(one.size(), 2u);
    EXPECT_EQ(one[0], (Action{0, 0}));
    EXPECT_EQ(one[1], (Action{1, 0}));
}

TEST(FeasibleActions, MonotoneInBatteries) {
    SystemParams p;
    for (int bs = 0; bs <= 5; ++bs) {
        for (int bd = 0; bd <= 5; ++bd) {
            const auto base = feasible_actions(State{{0, 0, 0, 0}, bs, bd}, p);
            EXPECT_EQ(base.front(), (Action{0, 0}));
            for (auto [ds, dd] : {std::pair{1, 0}, std::pair{0, 1}}) {
                if (bs + ds > 5 || bd + dd > 5) continue;
                const auto more = feasible_actions(State{{0, 0, 0, 0}, bs + ds, bd + dd}, p);
                for (const auto& a : base) EXPECT_NE(std::find(more.begin(), more.end(), a), more.end());
            }
        }
    }
}

TEST(TransitionProb, Examples) {
    SystemParams p;
    // b_src 3 spends 1 (0.5 mW) and harvests 2 -> 4; without harvest -> 2, so
    // landing on 4 pins the harvest. Same for the destination.
    const State s{{1, 1, 1, 1}, 3, 3};
    const Action a{1, 1};
    EXPECT_NEAR(transition_prob(s, a, State{{1, 1, 1, 1}, 4, 4}, p), 0.164025, 1e-15);
    EXPECT_EQ(transition_prob(s, a, State{{1, 1, 1, 1}, 3, 4}, p), 0.0);
    // Full battery, idle: both harvest branches clip to the cap.
    const State full{{0, 0, 0, 0}, 5, 5};
    EXPECT_NEAR(transition_prob(full, Action{0, 0}, full, p), 0.9 * 0.9 * 0.9 * 0.9, 1e-15);
    EXPECT_THROW(transition_prob(State{{0, 0, 0, 0}, 0, 0}, Action{1, 0}, full, p), InfeasibleError);
}

TEST(SuccessorDistribution, Examples) {
    SystemParams det = oracle::tiny_params();
    det.harvest_prob_src = det.harvest_prob_dst = 1.0;
    const auto one = successor_distribution(State{{0, 0, 0, 0}, 1, 1}, Action{1, 0}, det);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].probability, 1.0);

    SystemParams p;
    EXPECT_EQ(successor_distribution(State{{1, 0, 1, 0}, 3, 3}, Action{1, 1}, p).size(), 64u);
    EXPECT_EQ(successor_distribution(State{{1, 0, 1, 0}, 5, 5}, Action{0, 0}, p).size(), 16u);
}

TEST(SuccessorDistribution, AgreesWithTransitionProb) {
    // Sparse rows and the indicator formula are two independent routes.
    SystemParams p;
    p.harvest_units_dst = 0;
    p.harvest_prob_src = 0.3;
    p.channels[2].transition = {{0.6, 0.4}, {0.25, 0.75}};
    const StateSpace space(p);
    for (StateIndex s = 0; s < space.size(); s += 7) {
        const State st = space.decode(s);
        for (const auto& a : feasible_actions(st, p)) {
            std::map<StateIndex, double> row;
            for (const auto& succ : successor_distribution(st, a, p)) {
                EXPECT_GT(succ.probability, 0.0);
                row[space.encode(succ.state)] += succ.probability;
            }
            for (StateIndex t = 0; t < space.size(); ++t) {
                const double expected = transition_prob(st, a, space.decode(t), p);
                const double got = row.count(t) ? row[t] : 0.0;
                EXPECT_NEAR(got, expected, 1e-15);
            }
        }
    }
}

TEST(Kernel, RowsSumToOneAndStayInRange) {
    SystemParams p;
    const StateSpace space(p);
    const auto kernel = build_kernel(space, p);
    for (StateIndex s = 0; s < space.size(); ++s) {
        const State st = space.decode(s);
        for (ActionIndex a = 0; a < space.action_count(); ++a) {
            const auto row = kernel.row(s, a);
            if (!space.feasible(st, a)) {
                EXPECT_TRUE(row.empty());
                continue;
            }
            double sum = 0.0;
            for (const auto& t : row) {
                ASSERT_LT(t.next, space.size());
                const State n = space.decode(t.next);
                EXPECT_LE(n.b_src, p.battery_cap_src);
                EXPECT_LE(n.b_dst, p.battery_cap_dst);
                sum += t.probability;
            }
            EXPECT_NEAR(sum, 1.0, 1e-12);
        }
    }
}

TEST(Kernel, ChannelMarginalIsActionIndependent) {
    SystemParams p;
    p.channels[3].transition = {{0.7, 0.3}, {0.2, 0.8}};
    const StateSpace space(p);
    const auto kernel = build_kernel(space, p);
    for (StateIndex s = 0; s < space.size(); s += 5) {
        const State st = space.decode(s);
        for (ActionIndex a = 0; a < space.action_count(); ++a) {
            if (!space.feasible(st, a)) continue;
            std::map<std::array<std::size_t, 4>, double> marginal;
            for (const auto& t : kernel.row(s, a)) marginal[space.decode(t.next).gain_idx] += t.probability;
            for (const auto& [g, prob] : marginal) {
                double expected = 1.0;
                for (std::size_t l = 0; l < 4; ++l) expected *= p.channels[l].transition[st.gain_idx[l]][g[l]];
                EXPECT_NEAR(prob, expected, 1e-14);
            }
            EXPECT_EQ(marginal.size(), 16u);
        }
    }
}

TEST(RewardTable, Examples) {
    SystemParams p;
    const StateSpace space(p);
    const auto rewards = build_reward_table(space, p);
    for (StateIndex s = 0; s < space.size(); ++s) {
        EXPECT_EQ(rewards.reward(s, 0), 0.0);
        const State st = space.decode(s);
        if (st.b_src == 0) {
            for (ActionIndex a = 0; a < space.action_count(); ++a) {
                if (rewards.feasible(s, a)) {
                    EXPECT_EQ(rewards.reward(s, a), 0.0);
                }
            }
        }
    }
    const StateIndex s = space.encode(State{{1, 0, 1, 1}, 5, 5});
    const ActionIndex a = space.action_index(Action{3, 2});  // 2 mW transmit, 1 mW jamming
    EXPECT_NEAR(rewards.reward(s, a), 3.92e7, 0.005e7);
    EXPECT_NEAR(rewards.reward(s, a), oracle::reward(p, oracle::from(space.decode(s)), 3, 2), 1e-6);
    EXPECT_NEAR(rewards.secure_bits(s, a), oracle::rate_bps(p, oracle::from(space.decode(s)), 3, 2) * 5e-3, 1e-9);
    EXPECT_FALSE(rewards.feasible(space.encode(State{{1, 0, 1, 1}, 3, 5}), a));
    EXPECT_EQ(rewards.consumed_units(a), 6);
}

TEST(BuildMdp, DimensionsMatch) {
    const auto mdp = build_mdp(SystemParams{});
    EXPECT_EQ(mdp.kernel.state_count(), mdp.rewards.state_count());
    EXPECT_EQ(mdp.kernel.action_count(), mdp.rewards.action_count());
    EXPECT_THROW(TransitionKernel(2, 2, {0, 0}, {}), ShapeError);
}
