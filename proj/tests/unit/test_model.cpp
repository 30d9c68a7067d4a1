#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "mlmcjd/model.hpp"
#include "mlmcjd/path.hpp"

using namespace mlmcjd;

namespace {

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Mixture over the number of jumps N ~ Poisson(lambda T): given N = n the
// log terminal value is normal, so the call is a forward-measure
// Black-Scholes price. Written from the model dynamics, not the series
// used by the library.
double merton_mixture(const MertonParams& p) {
    const double m = std::exp(p.mark_mean + 0.5 * p.mark_variance) - 1.0;
    const double df = std::exp(-p.r * p.horizon);
    double pmf = std::exp(-p.lambda * p.horizon);
    double price = 0.0;
    for (int n = 0; n <= 80; ++n) {
        if (n > 0) pmf *= p.lambda * p.horizon / n;
        const double mean = std::log(p.s0) + (p.r - p.lambda * m - 0.5 * p.sigma * p.sigma) * p.horizon +
                            n * p.mark_mean;
        const double var = p.sigma * p.sigma * p.horizon + n * p.mark_variance;
        const double fwd = std::exp(mean + 0.5 * var);
        const double sd = std::sqrt(var);
        const double d1 = (std::log(fwd / p.strike) + 0.5 * var) / sd;
        price += pmf * df * (fwd * phi(d1) - p.strike * phi(d1 - sd));
    }
    return price;
}

}  // namespace

TEST(MertonParams, BaseConfiguration) {
    const MertonParams p;
    EXPECT_EQ(p.s0, 100.0);
    EXPECT_EQ(p.strike, 100.0);
    EXPECT_EQ(p.horizon, 1.0);
    EXPECT_EQ(p.r, 0.05);
    EXPECT_EQ(p.sigma, 0.2);
    EXPECT_EQ(p.mark_mean, 0.1);
    EXPECT_EQ(p.mark_variance, 0.2);
    EXPECT_EQ(p.lambda, 1.0);
    EXPECT_NEAR(p.compensator(), std::exp(0.2) - 1.0, 1e-15);
    EXPECT_NEAR(p.compensator(), 0.221403, 1e-6);
}

TEST(MertonParams, ValidationNamesTheField) {
    auto expect_field = [](MertonParams p, const std::string& field) {
        try {
            p.validate();
            FAIL() << "expected rejection of " << field;
        } catch (const std::invalid_argument& e) {
            EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
        }
    };
    MertonParams p;
    p.sigma = 0.0;
    expect_field(p, "sigma");
    p = {};
    p.lambda = -1.0;
    expect_field(p, "lambda");
    p = {};
    p.mark_variance = 0.0;
    expect_field(p, "mark_variance");
    p = {};
    p.s0 = -5.0;
    expect_field(p, "s0");
    p = {};
    p.strike = 0.0;
    expect_field(p, "strike");
    p = {};
    p.horizon = 0.0;
    expect_field(p, "horizon");
}

TEST(MertonModel, Coefficients) {
    const MertonParams p;
    const ModelSpec m = merton_model(p);
    const double comp = std::exp(0.2) - 1.0;
    EXPECT_NEAR(m.drift(100.0, 0.0), (0.05 - comp) * 100.0, 1e-12);
    EXPECT_EQ(m.volatility(50.0, 0.3), 10.0);
    EXPECT_EQ(m.volatility_derivative(50.0, 0.3), 0.2);
    EXPECT_EQ(m.jump_coefficient(50.0, 0.3), 50.0);
    EXPECT_TRUE(m.has_constant_rate());
    EXPECT_EQ(m.constant_rate(), 1.0);
    EXPECT_EQ(m.jump_rate(1e6, 0.2), 1.0);
    EXPECT_NO_THROW(m.validate());
}

TEST(MertonModel, NoJumpsIsGeometricBrownianMotion) {
    MertonParams p;
    p.lambda = 0.0;
    const ModelSpec m = merton_model(p);
    EXPECT_NEAR(m.drift(80.0, 0.0), 0.05 * 80.0, 1e-12);
    EXPECT_EQ(m.constant_rate(), 0.0);
}

TEST(StateDependentModel, IntensityValues) {
    const ModelSpec m = state_dependent_model(MertonParams{});
    EXPECT_FALSE(m.has_constant_rate());
    EXPECT_THROW(m.constant_rate(), std::logic_error);
    EXPECT_DOUBLE_EQ(m.jump_rate(100.0, 0.0), 0.5);
    EXPECT_DOUBLE_EQ(m.jump_rate(200.0, 0.0), 0.2);
    EXPECT_NEAR(m.jump_rate(0.0, 0.0), 1.0, 1e-15);
    EXPECT_LT(m.jump_rate(1e8, 0.0), 1e-10);
    ASSERT_TRUE(m.rate_bound().has_value());
    EXPECT_EQ(*m.rate_bound(), 1.0);
    for (double s = 0.0; s < 1000.0; s += 0.5) EXPECT_LE(m.jump_rate(s, 0.0), *m.rate_bound());
    // drift compensated with the local intensity
    const double comp = std::exp(0.2) - 1.0;
    EXPECT_NEAR(m.drift(200.0, 0.0), (0.05 - 0.2 * comp) * 200.0, 1e-12);
}

TEST(BlackScholes, ReferenceValue) {
    EXPECT_NEAR(black_scholes_call(100.0, 100.0, 0.05, 0.2, 1.0), 10.450583572185565, 1e-9);
}

TEST(MertonOracle, NoJumpsEqualsBlackScholes) {
    MertonParams p;
    p.lambda = 0.0;
    EXPECT_NEAR(merton_call_oracle(p), black_scholes_call(100.0, 100.0, 0.05, 0.2, 1.0), 1e-10);
    EXPECT_NEAR(merton_call_oracle(p), 10.450584, 1e-6);
}

TEST(MertonOracle, BaseParametersMatchJumpCountMixture) {
    const MertonParams p;
    EXPECT_NEAR(merton_call_oracle(p), merton_mixture(p), 1e-10);
    // frozen regression value
    EXPECT_NEAR(merton_call_oracle(p), 21.978894235751811, 1e-9);
    EXPECT_LT(merton_oracle_tail_bound(p), 1e-12);
}

TEST(MertonOracle, OtherParametersMatchJumpCountMixture) {
    MertonParams p;
    p.lambda = 2.5;
    p.mark_mean = -0.2;
    p.mark_variance = 0.05;
    p.strike = 90.0;
    p.horizon = 2.0;
    EXPECT_NEAR(merton_call_oracle(p), merton_mixture(p), 1e-9);
}

TEST(MertonOracle, ZeroStrikeLimitIsSpot) {
    MertonParams p;
    p.strike = 1e-9;
    EXPECT_NEAR(merton_call_oracle(p), p.s0, 1e-6);
}

TEST(ModelSpec, ValidateRejectsMissingPieces) {
    ModelSpec m = merton_model(MertonParams{});
    m.drift = nullptr;
    EXPECT_THROW(m.validate(), std::invalid_argument);
    m = merton_model(MertonParams{});
    m.horizon = 0.0;
    EXPECT_THROW(m.validate(), std::invalid_argument);
}

TEST(MertonModel, MartingaleCheck) {
    const MertonParams p;
    const ModelSpec m = merton_model(p);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    SinglePath work;
    for (int i = 0; i < n; ++i) {
        PathStreams streams(11, 6, i);
        simulate_single(m, 6, streams, {}, work);
        const double x = std::exp(-p.r * p.horizon) * work.path.terminal;
        sum += x;
        sum2 += x * x;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    EXPECT_NEAR(mean, p.s0, 3.0 * se);
}
