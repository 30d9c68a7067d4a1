#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mlmcjd/payoffs.hpp"

using namespace mlmcjd;

namespace {

OptionSpec option(OptionKind kind) {
    OptionSpec o;
    o.kind = kind;
    return o;
}

CoupledPaths grid_only(int level, std::vector<double> jumps) {
    CoupledPaths p;
    p.level = level;
    build_fine_grid(level, jumps, 1.0, p.grid.fine);
    build_coupling(p.grid.fine, p.grid.coarse, p.grid.map);
    return p;
}

// P(min of the bridge < m), from the reflection principle.
double bridge_min_cdf(double m, double a, double b, double var) {
    if (m >= std::min(a, b)) return 1.0;
    return std::exp(-2.0 * (a - m) * (b - m) / var);
}

}  // namespace

TEST(BridgeMinimum, EdgeCases) {
    EXPECT_DOUBLE_EQ(bridge_minimum(100.0, 105.0, 20.0, 0.25, 1.0), 100.0);
    EXPECT_DOUBLE_EQ(bridge_minimum(100.0, 95.0, 20.0, 0.25, 1.0), 95.0);
    EXPECT_DOUBLE_EQ(bridge_minimum(100.0, 95.0, 0.0, 0.25, 0.3), 95.0);
    EXPECT_LT(bridge_minimum(100.0, 100.0, 20.0, 0.25, 0.5), 100.0);
}

TEST(BridgeMinimum, DistributionMatchesReflectionPrinciple) {
    const double a = 100.0, b = 97.0, vol = 20.0, h = 0.1;
    const int n = 100000;
    RngStream u({3, 0, 0, Purpose::MinimumUniform});
    std::vector<double> mins(n);
    for (auto& m : mins) m = bridge_minimum(a, b, vol, h, 1.0 - u.uniform());
    std::sort(mins.begin(), mins.end());
    double d = 0.0;
    for (int i = 0; i < n; ++i) {
        const double f = bridge_min_cdf(mins[i], a, b, vol * vol * h);
        d = std::max({d, std::fabs(f - static_cast<double>(i) / n), std::fabs(f - static_cast<double>(i + 1) / n)});
    }
    // Kolmogorov-Smirnov critical value at the 1% level
    EXPECT_LT(d, 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST(SurvivalProbability, Cases) {
    EXPECT_EQ(survival_probability(100.0, 80.0, 85.0, 20.0, 0.1), 0.0);
    EXPECT_EQ(survival_probability(84.0, 90.0, 85.0, 20.0, 0.1), 0.0);
    EXPECT_DOUBLE_EQ(survival_probability(100.0, 100.0, 1.0, 20.0, 0.1), 1.0);
    EXPECT_EQ(survival_probability(100.0, 95.0, 85.0, 0.0, 0.1), 1.0);
    const double var = 400.0 * 0.1;
    EXPECT_NEAR(survival_probability(100.0, 95.0, 85.0, 20.0, 0.1), 1.0 - std::exp(-2.0 * 15.0 * 10.0 / var),
                1e-15);
}

TEST(BrownianInterpolant, Endpoints) {
    EXPECT_DOUBLE_EQ(brownian_interpolant(100.0, 110.0, 20.0, 0.0, 0.3, 0.0), 100.0);
    EXPECT_DOUBLE_EQ(brownian_interpolant(100.0, 110.0, 20.0, 0.3, 0.3, 1.0), 110.0);
    // straight line plus the bridge deviation
    EXPECT_NEAR(brownian_interpolant(100.0, 110.0, 20.0, 0.2, 0.3, 0.5), 105.0 + 20.0 * (0.2 - 0.15), 1e-12);
}

TEST(SmoothedDigital, Values) {
    EXPECT_DOUBLE_EQ(smoothed_digital(0.0, 20.0, 0.1), 0.5);
    EXPECT_NEAR(smoothed_digital(1000.0, 20.0, 0.1), 1.0, 1e-15);
    EXPECT_NEAR(smoothed_digital(-1000.0, 20.0, 0.1), 0.0, 1e-15);
    EXPECT_EQ(smoothed_digital(1.0, 0.0, 0.1), 1.0);
    EXPECT_EQ(smoothed_digital(-1.0, 20.0, 0.0), 0.0);
    EXPECT_NEAR(smoothed_digital(2.0, 2.0, 1.0), 0.8413447460685429, 1e-12);
}

TEST(ClassifyDigital, Cases) {
    EXPECT_EQ(classify_digital(grid_only(2, {})), DigitalCase::NoLateJump);
    EXPECT_EQ(classify_digital(grid_only(2, {0.3})), DigitalCase::NoLateJump);
    EXPECT_EQ(classify_digital(grid_only(2, {0.9})), DigitalCase::LastStep);
    EXPECT_EQ(classify_digital(grid_only(2, {0.6})), DigitalCase::PenultimateStep);
    EXPECT_EQ(classify_digital(grid_only(2, {0.6, 0.9})), DigitalCase::LastStep);
}

TEST(FineValue, DeterministicPath) {
    ModelSpec m = merton_model(MertonParams{.lambda = 0.0});
    m.drift = [](double, double) { return 0.0; };
    m.volatility = [](double, double) { return 0.0; };
    PathStreams streams(1, 3, 0);
    SinglePath sp;
    simulate_single(m, 3, streams, {true, true}, sp);
    OptionSpec o = option(OptionKind::Vanilla);
    o.rate = 0.0;
    o.strike = 90.0;
    EXPECT_DOUBLE_EQ(fine_value(sp.path, o), 10.0);
    o.kind = OptionKind::Asian;
    EXPECT_NEAR(fine_value(sp.path, o), 10.0, 1e-12);
    o.kind = OptionKind::Lookback;
    EXPECT_NEAR(fine_value(sp.path, o), 0.0, 1e-12);
    o.kind = OptionKind::Barrier;
    o.barrier = 85.0;
    EXPECT_DOUBLE_EQ(fine_value(sp.path, o), 10.0);
    o.kind = OptionKind::Digital;
    EXPECT_EQ(fine_value(sp.path, o), 1.0);
}

TEST(FineValue, VanillaDiscounting) {
    PathRecord p;
    p.terminal = 110.0;
    StepRecord st;
    st.h = 1.0;
    st.s_start = st.s_end = st.s_end_minus = 110.0;
    p.steps.push_back(st);
    OptionSpec o = option(OptionKind::Vanilla);
    EXPECT_DOUBLE_EQ(fine_value(p, o), std::exp(-0.05) * 10.0);
}

TEST(Payoffs, PathwiseBounds) {
    const ModelSpec m = merton_model(MertonParams{});
    CoupledPaths cp;
    const OptionSpec van = option(OptionKind::Vanilla);
    const OptionSpec bar = option(OptionKind::Barrier);
    const OptionSpec dig = option(OptionKind::Digital);
    const OptionSpec lb = option(OptionKind::Lookback);
    for (std::uint64_t i = 0; i < 2000; ++i) {
        PathStreams streams(8, 4, i);
        simulate_coupled(m, 4, streams, {false, true}, cp);
        const PayoffPair v = vanilla(cp, van);
        const PayoffPair b = barrier(cp, bar);
        const PayoffPair d = digital(cp, dig);
        const PayoffPair l = lookback(cp, lb);
        ASSERT_LE(b.fine_value, v.fine_value);
        ASSERT_LE(b.coarse_value, v.coarse_value);
        ASSERT_GE(b.coarse_value, 0.0);
        for (double x : {d.fine_value, d.coarse_value}) {
            ASSERT_GE(x, 0.0);
            ASSERT_LE(x, dig.discount());
        }
        ASSERT_GE(l.fine_value, 0.0);
        ASSERT_GE(l.coarse_value, 0.0);
    }
}

TEST(Payoffs, WrongKindIsRejected) {
    const CoupledPaths cp = grid_only(2, {});
    EXPECT_THROW(vanilla(cp, option(OptionKind::Asian)), std::invalid_argument);
    EXPECT_THROW(parse_option_kind("american"), std::invalid_argument);
    EXPECT_EQ(parse_option_kind("lookback"), OptionKind::Lookback);
}

TEST(OptionSpec, BarrierMustBeBelowSpot) {
    OptionSpec o = option(OptionKind::Barrier);
    o.barrier = 120.0;
    EXPECT_THROW(o.validate(100.0), std::invalid_argument);
    o.barrier = 85.0;
    EXPECT_NO_THROW(o.validate(100.0));
}

// The coarse estimator at level l must have the same mean as the fine
// estimator at level l-1, for every payoff and both digital variants.
class Telescoping : public ::testing::TestWithParam<OptionKind> {};

TEST_P(Telescoping, CoarseMeanMatchesPreviousFineMean) {
    const ModelSpec m = merton_model(MertonParams{.lambda = 2.0});
    OptionSpec o = option(GetParam());
    const int level = 3;
    const int n = 40000;
    const BridgeNeeds needs = bridge_needs(o.kind);
    CoupledPaths cp;
    double sc = 0, sc2 = 0, sf = 0, sf2 = 0;
    for (int i = 0; i < n; ++i) {
        PathStreams s1(11, level, i);
        simulate_coupled(m, level, s1, needs, cp);
        const double c = evaluate(cp, o).coarse_value;
        sc += c;
        sc2 += c * c;
        PathStreams s2(12, level - 1, i);
        simulate_coupled(m, level - 1, s2, needs, cp);
        const double f = evaluate(cp, o).fine_value;
        sf += f;
        sf2 += f * f;
    }
    const double mc = sc / n, mf = sf / n;
    const double se = std::sqrt((sc2 / n - mc * mc) / n + (sf2 / n - mf * mf) / n);
    EXPECT_NEAR(mc, mf, 4.0 * se) << to_string(o.kind);
}

INSTANTIATE_TEST_SUITE_P(AllKinds, Telescoping,
                         ::testing::Values(OptionKind::Vanilla, OptionKind::Asian, OptionKind::Lookback,
                                           OptionKind::Barrier, OptionKind::Digital),
                         [](const auto& info) { return std::string(to_string(info.param)); });
