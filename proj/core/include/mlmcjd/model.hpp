#pragma once

#include <functional>
#include <optional>
#include <variant>

namespace mlmcjd {

/// Coefficient function of (state, time).
using Coefficient = std::function<double(double s, double t)>;

struct ConstantRate {
    double lambda = 0.0;
};

struct StateDependentRate {
    Coefficient lambda;
    std::optional<double> lambda_sup;
};

using RateSpec = std::variant<ConstantRate, StateDependentRate>;

/// Scalar jump-diffusion
///   dS = a(S-,t) dt + b(S-,t) dW + c(S-,t) dJ,   J = sum (Y_i - 1),
/// with log Y_i ~ N(mark_mean, mark_variance).
struct ModelSpec {
    Coefficient drift;
    Coefficient volatility;
    Coefficient volatility_derivative;
    Coefficient jump_coefficient;
    RateSpec rate;
    double mark_mean = 0.0;
    double mark_variance = 0.0;
    double initial_value = 0.0;
    double horizon = 0.0;

    bool has_constant_rate() const { return std::holds_alternative<ConstantRate>(rate); }
    /// Throws std::logic_error for state-dependent rates.
    double constant_rate() const;
    /// Jump intensity at (s, t) whatever the rate kind.
    double jump_rate(double s, double t) const;
    /// Bound used for thinning; empty for constant rates without one.
    std::optional<double> rate_bound() const;

    void validate() const;
};

/// Merton model parameters. Defaults are the base configuration used
/// throughout the experiments.
struct MertonParams {
    double r = 0.05;
    double sigma = 0.2;
    double lambda = 1.0;
    double mark_mean = 0.1;
    double mark_variance = 0.2;
    double s0 = 100.0;
    double strike = 100.0;
    double horizon = 1.0;

    /// m = E[Y] - 1.
    double compensator() const;
    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

ModelSpec merton_model(const MertonParams& p);

/// Merton dynamics with intensity 1 / (1 + (s/S0)^2), bounded by 1. The
/// drift is compensated with the state-dependent intensity.
ModelSpec state_dependent_model(const MertonParams& p);

double black_scholes_call(double s0, double strike, double r, double sigma, double horizon);

/// Merton's series for a European call, truncated after n_terms+1 terms.
double merton_call_oracle(const MertonParams& p, int n_terms = 50);

/// Upper bound on the truncation error of merton_call_oracle: the Poisson
/// tail mass beyond n_terms times S0.
double merton_oracle_tail_bound(const MertonParams& p, int n_terms = 50);

}  // namespace mlmcjd
