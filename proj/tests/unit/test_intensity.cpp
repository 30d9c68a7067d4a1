#include <gtest/gtest.h>

#include <cmath>
#include <optional>

#include "mlmcjd/errors.hpp"
#include "mlmcjd/intensity.hpp"
#include "mlmcjd/payoffs.hpp"

using namespace mlmcjd;

namespace {

ModelSpec flat_intensity(double lambda, std::optional<double> sup) {
    ModelSpec m = state_dependent_model(MertonParams{});
    m.rate = StateDependentRate{[lambda](double, double) { return lambda; }, sup};
    return m;
}

struct Moments {
    double sum = 0.0, sum2 = 0.0;
    int n = 0;
    void add(double x) {
        sum += x;
        sum2 += x * x;
        ++n;
    }
    double mean() const { return sum / n; }
    double se() const { return std::sqrt((sum2 / n - mean() * mean()) / n); }
};

}  // namespace

TEST(ThinningFactor, Values) {
    EXPECT_DOUBLE_EQ(thinning_factor(0.3, true), 0.6);
    EXPECT_DOUBLE_EQ(thinning_factor(0.3, false), 1.4);
    EXPECT_EQ(thinning_factor(1.0, false), 0.0);
    EXPECT_EQ(thinning_factor(0.5, true), 1.0);
}

TEST(AcceptanceProbability, ChecksBound) {
    EXPECT_DOUBLE_EQ(acceptance_probability(flat_intensity(0.25, 1.0), 100.0, 0.0), 0.25);
    EXPECT_THROW(acceptance_probability(flat_intensity(2.0, 1.0), 100.0, 0.0), std::domain_error);
    EXPECT_THROW(acceptance_probability(flat_intensity(0.5, std::nullopt), 100.0, 0.0), std::invalid_argument);
    const ModelSpec sd = state_dependent_model(MertonParams{});
    EXPECT_DOUBLE_EQ(acceptance_probability(sd, 100.0, 0.0), 0.5);
}

TEST(Thinning, IntensityAboveBoundIsRejected) {
    const ModelSpec m = flat_intensity(3.0, 2.0);
    bool thrown = false;
    for (std::uint64_t i = 0; i < 50 && !thrown; ++i) {
        PathStreams streams(1, 2, i);
        try {
            thinning_coupled(m, 2, streams, {}, true);
        } catch (const std::domain_error&) {
            thrown = true;
        }
    }
    EXPECT_TRUE(thrown);
}

TEST(Thinning, MissingBoundIsRejected) {
    PathStreams streams(1, 2, 0);
    EXPECT_THROW(thinning_coupled(flat_intensity(0.5, std::nullopt), 2, streams, {}, true), std::invalid_argument);
}

TEST(Thinning, FullIntensityWeightsAreZeroOrPowersOfTwo) {
    const ModelSpec m = flat_intensity(1.0, 1.0);
    ThinningPaths tp;
    Moments w;
    for (std::uint64_t i = 0; i < 100000; ++i) {
        PathStreams streams(4, 3, i);
        thinning_coupled(m, 3, streams, {}, true, tp);
        const std::size_t k = tp.events.size();
        bool all = true;
        for (const auto& ev : tp.events) all = all && ev.accepted_fine;
        const double expected = all ? std::ldexp(1.0, static_cast<int>(k)) : 0.0;
        ASSERT_EQ(tp.weights.fine_weight, expected);
        ASSERT_EQ(tp.weights.coarse_weight, expected);
        w.add(tp.weights.fine_weight);
    }
    EXPECT_NEAR(w.mean(), 1.0, 4.0 * w.se());
}

TEST(Thinning, StateIndependentIntensityGivesEqualWeights) {
    const ModelSpec m = flat_intensity(0.4, 1.5);
    ThinningPaths tp;
    for (std::uint64_t i = 0; i < 2000; ++i) {
        PathStreams streams(5, 4, i);
        thinning_coupled(m, 4, streams, {}, true, tp);
        ASSERT_EQ(tp.weights.fine_weight, tp.weights.coarse_weight);
        thinning_coupled(m, 4, streams, {}, false, tp);
        for (const auto& ev : tp.events) ASSERT_EQ(ev.accepted_fine, ev.accepted_coarse);
    }
}

TEST(Thinning, CandidatesAreSharedAndCounted) {
    const ModelSpec m = state_dependent_model(MertonParams{});
    ThinningPaths tp;
    for (std::uint64_t i = 0; i < 2000; ++i) {
        PathStreams streams(6, 3, i);
        thinning_coupled(m, 3, streams, {}, false, tp);
        ASSERT_EQ(tp.paths.fine.jump_count, tp.events.size());
        ASSERT_EQ(tp.paths.coarse.jump_count, tp.events.size());
        std::uint32_t accepted = 0;
        for (const auto& ev : tp.events) accepted += ev.accepted_fine;
        ASSERT_EQ(tp.paths.fine.accepted_jumps, accepted);
        ASSERT_EQ(tp.weights.fine_weight, 1.0);
    }
}

TEST(Thinning, PlainAcceptanceRate) {
    const ModelSpec m = flat_intensity(0.3, 1.0);
    Moments count;
    SinglePath sp;
    for (std::uint64_t i = 0; i < 100000; ++i) {
        PathStreams streams(7, 0, i);
        thinning_single(m, 0, streams, {}, false, sp);
        count.add(sp.path.accepted_jumps);
    }
    EXPECT_NEAR(count.mean(), 0.3, 4.0 * count.se());
}

TEST(Cumulative, ConstantIntensityWeightIsExactlyOne) {
    const ModelSpec m = flat_intensity(1.3, std::nullopt);
    CumulativePaths cp;
    for (std::uint64_t i = 0; i < 2000; ++i) {
        PathStreams streams(8, 3, i);
        cumulative_coupled(m, 3, streams, {}, cp);
        ASSERT_EQ(cp.weights.coarse_weight, 1.0);
        ASSERT_EQ(cp.weights.fine_weight, 1.0);
    }
}

TEST(Cumulative, ConstantIntensityJumpCount) {
    const ModelSpec m = flat_intensity(1.3, std::nullopt);
    SinglePath sp;
    Moments count;
    for (std::uint64_t i = 0; i < 100000; ++i) {
        PathStreams streams(9, 2, i);
        cumulative_single(m, 2, streams, {}, sp);
        count.add(static_cast<double>(sp.jumps.size()));
    }
    EXPECT_NEAR(count.mean(), 1.3, 4.0 * count.se());
}

TEST(Cumulative, GridIsConsistent) {
    const ModelSpec m = state_dependent_model(MertonParams{.lambda = 1.0});
    SinglePath sp;
    CumulativeState state;
    for (std::uint64_t i = 0; i < 2000; ++i) {
        PathStreams streams(10, 3, i);
        cumulative_single(m, 3, streams, {}, sp, &state);
        const TimeGrid& g = sp.grid;
        ASSERT_EQ(g.points.front(), 0.0);
        ASSERT_EQ(g.points.back(), 1.0);
        ASSERT_EQ(g.jump_offset.size(), g.points.size() + 1);
        ASSERT_EQ(g.jump_offset.back(), sp.jumps.size());
        ASSERT_EQ(sp.path.steps.size(), g.steps());
        for (std::size_t k = 1; k < g.points.size(); ++k) ASSERT_GT(g.points[k], g.points[k - 1]);
        ASSERT_LE(state.lambda_running, state.e_target);
        ASSERT_EQ(state.jump_times, sp.jumps.times);
        EXPECT_NO_THROW(sp.jumps.validate());
    }
}

TEST(Cumulative, RejectsNegativeIntensity) {
    PathStreams streams(1, 1, 0);
    EXPECT_THROW(cumulative_coupled(flat_intensity(-1.0, std::nullopt), 1, streams), NumericalError);
}

// Both thinning variants run on the same candidate grid, so their level-0
// estimators share one expectation.
TEST(StateDependent, LevelZeroMeansAgree) {
    const ModelSpec m = state_dependent_model(MertonParams{});
    OptionSpec o;
    Moments q, plain;
    SinglePath sp;
    for (std::uint64_t i = 0; i < 200000; ++i) {
        PathStreams a(13, 0, i);
        thinning_single(m, 0, a, {}, true, sp);
        q.add(fine_value(sp.path, o) * sp.path.likelihood_weight);
        PathStreams b(14, 0, i);
        thinning_single(m, 0, b, {}, false, sp);
        plain.add(fine_value(sp.path, o));
    }
    EXPECT_NEAR(q.mean(), plain.mean(), 4.0 * std::hypot(q.se(), plain.se()));
}
