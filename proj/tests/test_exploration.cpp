#include <gtest/gtest.h>

#include <cmath>

#include "coopdqn/exploration.hpp"

using namespace coopdqn;

TEST(Temperature, EndpointsAndInterpolation) {
    const AnnealSchedule s{1.0, 0.1, 3};
    EXPECT_EQ(temperature(s, 1), 1.0);
    EXPECT_DOUBLE_EQ(temperature(s, 2), 0.55);
    EXPECT_EQ(temperature(s, 3), 0.1);
    EXPECT_EQ(temperature(s, 100), 0.1);
    const AnnealSchedule one{0.7, 0.2, 1};
    EXPECT_EQ(temperature(one, 1), 0.7);
    EXPECT_EQ(temperature(one, 2), 0.2);
    EXPECT_THROW(temperature(s, 0), ConfigError);
}

TEST(Temperature, NonIncreasingThenConstant) {
    const AnnealSchedule s{1.3, 0.1, 1000};
    double prev = temperature(s, 1);
    for (std::int64_t t = 2; t <= 1500; ++t) {
        const double cur = temperature(s, t);
        EXPECT_LE(cur, prev);
        if (t >= 1000) EXPECT_EQ(cur, 0.1);
        prev = cur;
    }
}

TEST(ExplorationStrength, ClosedCases) {
    EXPECT_DOUBLE_EQ(exploration_strength({0.3, 0.3, 1000}), 0.3);
    EXPECT_NEAR(exploration_strength({1.0, 1e-300, 4}), 5.0 / 6.0, 1e-15);
    EXPECT_THROW(exploration_strength({1.0, 0.1, 1}), ConfigError);
}

TEST(ExplorationStrength, PaperLengthSchedule) {
    const AnnealSchedule s{0.8, 0.1, 95000};
    // summation oracle on the interpolation formula
    double sum = 0.0;
    for (int t = 1; t <= 47500; ++t) sum += 0.8 + (0.1 - 0.8) * (t - 1) / 94999.0;
    EXPECT_NEAR(exploration_strength(s), sum / 47500.0, 1e-12);
    EXPECT_NEAR(exploration_strength(s), 0.625001842124654, 1e-12);
}

TEST(ExplorationStrength, MonotoneInTauInit) {
    double prev = 0.0;
    for (double ti = 0.1; ti < 3.0; ti += 0.1) {
        const double b = exploration_strength({ti, 0.1, 500});
        EXPECT_GT(b, prev);
        prev = b;
    }
}

TEST(Softmax, SymmetricAndKnownValues) {
    Rng rng(1);
    auto d = softmax_policy({3.0, 3.0}, 0.7, rng);
    EXPECT_EQ(d.probs[0], 0.5);
    EXPECT_EQ(d.probs[1], 0.5);
    d = softmax_policy({1.0, 0.0}, 1.0, rng);
    EXPECT_NEAR(d.probs[0], 0.7310585786300049, 1e-15);
    EXPECT_NEAR(d.probs[0] + d.probs[1], 1.0, 1e-12);
    d = softmax_policy({1.0, 0.0}, 0.01, rng);
    EXPECT_LT(d.probs[1], 1e-40);
    EXPECT_GE(d.probs[0], 1.0 - 1e-40);
    EXPECT_THROW(softmax_policy({NAN, 0.0}, 1.0, rng), NumericFault);
    EXPECT_THROW(softmax_policy({INFINITY, 0.0}, 1.0, rng), NumericFault);
}

TEST(Softmax, ShiftInvariance) {
    Rng rng(6);
    for (int k = 0; k < 500; ++k) {
        const QPair q{rng.uniform(-5, 5), rng.uniform(-5, 5)};
        const double c = rng.uniform(-100, 100);
        const double tau = rng.uniform(0.05, 2.0);
        const auto a = softmax_probs(q, tau);
        const auto b = softmax_probs({q[0] + c, q[1] + c}, tau);
        EXPECT_NEAR(a[0], b[0], 1e-12);
        EXPECT_NEAR(a[1], b[1], 1e-12);
    }
}

TEST(Softmax, SharperAtLowerTemperature) {
    const QPair q{1.0, 0.4};
    double prev = 0.0;
    for (double tau = 3.0; tau > 0.05; tau *= 0.8) {
        const double p = softmax_probs(q, tau)[0];
        EXPECT_GT(p, prev);
        prev = p;
    }
}

TEST(Softmax, EmpiricalFrequency) {
    Rng rng(12345);
    const QPair q{0.3, -0.2};
    const double tau = 0.5;
    const double p = softmax_probs(q, tau)[0];
    const int n = 1000000;
    int coop = 0;
    for (int k = 0; k < n; ++k) coop += softmax_policy(q, tau, rng).action == Action::Cooperate;
    const double sigma = std::sqrt(n * p * (1 - p));
    EXPECT_LT(std::abs(coop - n * p), 3 * sigma);
}

TEST(Greedy, ArgmaxWithCooperateTieBreak) {
    EXPECT_EQ(greedy_action({2, 1}), Action::Cooperate);
    EXPECT_EQ(greedy_action({1, 2}), Action::Defect);
    EXPECT_EQ(greedy_action({1, 1}), Action::Cooperate);
}
