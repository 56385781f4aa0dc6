#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "coopdqn/game.hpp"
#include "coopdqn/topology.hpp"

using namespace coopdqn;

namespace {

void expect_valid_degree4(const Topology& t) {
    for (std::size_t i = 0; i < t.n_agents(); ++i) {
        const auto& nb = t.neighbors(i);
        std::set<std::uint32_t> uniq(nb.begin(), nb.end());
        EXPECT_EQ(uniq.size(), 4u);
        EXPECT_EQ(uniq.count(static_cast<std::uint32_t>(i)), 0u);
        for (auto j : nb) {
            const auto& back = t.neighbors(j);
            EXPECT_NE(std::find(back.begin(), back.end(), i), back.end());
        }
    }
}

} // namespace

TEST(Action, EncodingRoundTrip) {
    EXPECT_EQ(encode(Action::Cooperate), 0);
    EXPECT_EQ(encode(Action::Defect), 1);
    for (int v : {0, 1}) EXPECT_EQ(encode(decode_action(v)), v);
    EXPECT_THROW(decode_action(2), ConfigError);
}

TEST(Payoff, MatrixEntries) {
    const PayoffParams p(0.25, 0.25);
    EXPECT_DOUBLE_EQ(payoff(Action::Cooperate, Action::Cooperate, p), 1.0);
    EXPECT_DOUBLE_EQ(payoff(Action::Defect, Action::Defect, p), 0.0);
    EXPECT_DOUBLE_EQ(payoff(Action::Cooperate, Action::Defect, p), -0.25);
    EXPECT_DOUBLE_EQ(payoff(Action::Defect, Action::Cooperate, p), 1.25);
}

TEST(Payoff, RejectsOutOfRange) {
    EXPECT_THROW(PayoffParams(1.5, 0.2), ConfigError);
    EXPECT_THROW(PayoffParams(0.2, -0.1), ConfigError);
    EXPECT_NO_THROW(PayoffParams(0.0, 1.0));
}

TEST(Payoff, OffDiagonalSumProperty) {
    Rng rng(11);
    for (int k = 0; k < 200; ++k) {
        const double dr = rng.uniform01(), dg = rng.uniform01();
        const PayoffParams p(dr, dg);
        EXPECT_NEAR(payoff(Action::Cooperate, Action::Defect, p) + payoff(Action::Defect, Action::Cooperate, p),
                    1.0 + dg - dr, 1e-15);
    }
}

TEST(StepRewards, AllCooperateIsOneEverywhere) {
    const PayoffParams p(0.3, 0.3);
    for (const Topology& t : {make_grid(5), make_random_regular(30, 1), make_small_world(30, 0.2, 2),
                              make_modular(30, 3, 2, 3)}) {
        std::vector<Action> a(t.n_agents(), Action::Cooperate);
        for (double r : step_rewards(a, t, p)) EXPECT_EQ(r, 1.0);
    }
}

TEST(StepRewards, LoneDefectorAndMixedNeighborhood) {
    const auto g = make_grid(5);
    std::vector<Action> a(25, Action::Cooperate);
    a[12] = Action::Defect;
    EXPECT_DOUBLE_EQ(step_rewards(a, g, PayoffParams(0.25, 0.25))[12], 1.25);

    // agent 12 cooperates; up and down defect, left and right cooperate
    std::vector<Action> b(25, Action::Cooperate);
    const auto& nb = g.neighbors(12);
    b[nb[0]] = Action::Defect;
    b[nb[1]] = Action::Defect;
    EXPECT_NEAR(step_rewards(b, g, PayoffParams(0.2, 0.2))[12], 0.4, 1e-15);
}

TEST(StepRewards, SizeMismatch) {
    std::vector<Action> a(8, Action::Cooperate);
    EXPECT_THROW(step_rewards(a, make_grid(3), PayoffParams(0.1, 0.1)), ConfigError);
}

TEST(CooperationRate, CountsCooperators) {
    std::vector<Action> a(900, Action::Defect);
    EXPECT_EQ(cooperation_rate(a), 0.0);
    std::fill(a.begin(), a.begin() + 450, Action::Cooperate);
    EXPECT_EQ(cooperation_rate(a), 0.5);
    std::fill(a.begin(), a.end(), Action::Cooperate);
    EXPECT_EQ(cooperation_rate(a), 1.0);
    EXPECT_THROW(cooperation_rate(std::vector<Action>{}), ConfigError);
}

TEST(CooperationRate, MatchesBruteForceCount) {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = 1 + rng.index(500);
        std::vector<Action> a(n);
        std::size_t c = 0;
        for (auto& x : a) {
            x = rng.bernoulli(0.3) ? Action::Cooperate : Action::Defect;
            c += x == Action::Cooperate;
        }
        EXPECT_EQ(cooperation_rate(a), static_cast<double>(c) / static_cast<double>(n));
    }
}

TEST(BuildState, BaseEncoding) {
    const auto g = make_grid(4);
    std::vector<Action> prev(16, Action::Cooperate);
    auto s = build_state(5, prev, g, AugMode::None);
    EXPECT_EQ(s.dim, 5);
    for (double v : s.view()) EXPECT_EQ(v, 0.0);
    prev[5] = Action::Defect;
    s = build_state(5, prev, g, AugMode::None);
    EXPECT_EQ(std::vector<double>(s.view().begin(), s.view().end()), (std::vector<double>{0, 0, 0, 0, 1}));
    prev[g.neighbors(5)[2]] = Action::Defect; // left neighbor
    s = build_state(5, prev, g, AugMode::None);
    EXPECT_EQ(std::vector<double>(s.view().begin(), s.view().end()), (std::vector<double>{0, 0, 1, 0, 1}));
}

TEST(BuildState, Augmentation) {
    const auto g = make_grid(3);
    std::vector<Action> prev(9, Action::Cooperate);
    const AugValues aug = training_aug_values(0.5, 1.0, 50, 100);
    EXPECT_DOUBLE_EQ(aug.tau_signal, 0.5);
    EXPECT_DOUBLE_EQ(aug.progress, 0.5);
    const auto joint = build_state(0, prev, g, AugMode::Joint, aug);
    ASSERT_EQ(joint.dim, 7);
    EXPECT_EQ(joint.values[5], 0.5);
    EXPECT_EQ(joint.values[6], 0.5);
    EXPECT_EQ(build_state(0, prev, g, AugMode::Tau, aug).dim, 6);
    EXPECT_EQ(build_state(0, prev, g, AugMode::Progress, {0.9, 0.25}).values[5], 0.25);

    const AugValues ev = eval_aug_values(0.1, 0.8);
    EXPECT_DOUBLE_EQ(ev.tau_signal, 0.125);
    EXPECT_EQ(ev.progress, 1.0);
    EXPECT_EQ(training_aug_values(2.0, 1.0, 500, 100).progress, 1.0);
    EXPECT_EQ(training_aug_values(2.0, 1.0, 500, 100).tau_signal, 1.0);
}

TEST(BuildState, UnknownAgent) {
    const auto g = make_grid(3);
    std::vector<Action> prev(9, Action::Cooperate);
    EXPECT_THROW(build_state(9, prev, g, AugMode::None), ConfigError);
}

TEST(Grid, SizeOrderAndWraparound) {
    const auto g = make_grid(30);
    EXPECT_EQ(g.n_agents(), 900u);
    expect_valid_degree4(g);

    const auto g3 = make_grid(3);
    // agent (0,0): up is (2,0) = 6, left is (0,2) = 2
    EXPECT_EQ(g3.neighbors(0), (Neighbors{6, 3, 2, 1}));
    EXPECT_THROW(make_grid(2), ConfigError);
}

TEST(Grid, DirectedEdgeCountAndDeterministicOrder) {
    const auto g = make_grid(4);
    std::size_t directed = 0;
    for (std::size_t i = 0; i < g.n_agents(); ++i) directed += g.neighbors(i).size();
    EXPECT_EQ(directed, 2 * 16 * 2u);
    EXPECT_EQ(g.edges().size(), 32u);
    const auto again = make_grid(4);
    for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(g.neighbors(i), again.neighbors(i));
}

TEST(RandomRegular, DegreesAndDeterminism) {
    const auto a = make_random_regular(900, 42);
    expect_valid_degree4(a);
    const auto b = make_random_regular(900, 42);
    EXPECT_EQ(a.edges(), b.edges());
    EXPECT_NE(a.edges(), make_random_regular(900, 43).edges());
}

TEST(RandomRegular, FiveNodesIsK5) {
    const auto k5 = make_random_regular(5, 7);
    EXPECT_EQ(k5.edges().size(), 10u);
    expect_valid_degree4(k5);
    EXPECT_THROW(make_random_regular(4, 1), ConfigError);
}

TEST(SmallWorld, ZeroRewiringIsRingLattice) {
    const auto g = make_small_world(900, 0.0, 3);
    expect_valid_degree4(g);
    for (std::uint32_t i = 0; i < 900; ++i) {
        std::set<std::uint32_t> want{(i + 1) % 900, (i + 2) % 900, (i + 899) % 900, (i + 898) % 900};
        EXPECT_EQ(std::set<std::uint32_t>(g.neighbors(i).begin(), g.neighbors(i).end()), want);
    }
}

TEST(SmallWorld, RewiredIsDeterministicAndDegreeFour) {
    const auto a = make_small_world(900, 0.1, 9);
    const auto b = make_small_world(900, 0.1, 9);
    expect_valid_degree4(a);
    EXPECT_EQ(a.edges(), b.edges());
    EXPECT_NE(a.edges(), make_small_world(900, 0.0, 9).edges());
}

TEST(Modular, ComponentsWithoutCrossEdges) {
    const auto m = make_modular(900, 9, 0, 4);
    expect_valid_degree4(m);
    EXPECT_EQ(m.connected_components(), 9u);
    const auto joined = make_modular(900, 9, 20, 4);
    expect_valid_degree4(joined);
    EXPECT_LT(joined.connected_components(), 9u);
    EXPECT_THROW(make_modular(900, 7, 0, 1), ConfigError);
}

TEST(Topology, EdgeListFormat) {
    std::ostringstream os;
    make_grid(3).write_edge_list(os);
    const std::string s = os.str();
    EXPECT_EQ(s.substr(0, 4), "0 1\n");
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 18);
}
