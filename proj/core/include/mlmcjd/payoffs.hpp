#pragma once

#include <cstdint>
#include <string_view>

#include "mlmcjd/path.hpp"

namespace mlmcjd {

enum class OptionKind : std::uint8_t { Vanilla, Asian, Lookback, Barrier, Digital };

/// Drift horizon for the coarse digital estimator when the last jump falls
/// in the penultimate fine step. AsPrinted drifts over h_j = T - J - h only;
/// FullStep drifts over the whole coarse step T - J.
enum class DigitalCase3Drift : std::uint8_t { AsPrinted, FullStep };

struct OptionSpec {
    OptionKind kind = OptionKind::Vanilla;
    double strike = 100.0;
    /// Down-and-out level, Barrier only.
    double barrier = 85.0;
    double rate = 0.05;
    double horizon = 1.0;
    DigitalCase3Drift digital_case3 = DigitalCase3Drift::AsPrinted;

    double discount() const;
    void validate(double s0) const;
};

struct PayoffPair {
    double fine_value = 0.0;
    double coarse_value = 0.0;
};

std::string_view to_string(OptionKind kind);
/// Throws std::invalid_argument for unknown names.
OptionKind parse_option_kind(std::string_view name);

/// Bridge variables each kind consumes on fine steps.
BridgeNeeds bridge_needs(OptionKind kind);

// Brownian-bridge building blocks, all with volatility frozen over the step.

/// Minimum of a bridge from s0 to s1 over a step of length h, sampled from
/// the uniform u in (0, 1].
double bridge_minimum(double s0, double s1, double b, double h, double u);

/// Probability that a bridge from s0 to s1 stays above `barrier`.
double survival_probability(double s0, double s1, double barrier, double b, double h);

/// Conditional Brownian interpolant at fraction mu of a step from s0 to s1,
/// given W(t') - W_n = dW_first and W_{n+1} - W_n = dW_total.
double brownian_interpolant(double s0, double s1, double b, double dW_first, double dW_total,
                            double mu);

/// Phi(x / (|b| sqrt(h))), the limit indicator when b or h vanish.
double smoothed_digital(double x, double b, double h);

enum class DigitalCase : std::uint8_t {
    NoLateJump = 1,      ///< no jump in the last two fine steps
    LastStep = 2,        ///< last jump inside the last fine step
    PenultimateStep = 3  ///< last jump inside the penultimate fine step
};

DigitalCase classify_digital(const CoupledPaths& paths);

/// Discounted payoff estimator of a path on its own grid (the fine
/// estimator, and the only one at level 0).
double fine_value(const PathRecord& path, const OptionSpec& opt);

PayoffPair vanilla(const CoupledPaths& paths, const OptionSpec& opt);
PayoffPair asian(const CoupledPaths& paths, const OptionSpec& opt);
PayoffPair lookback(const CoupledPaths& paths, const OptionSpec& opt);
PayoffPair barrier(const CoupledPaths& paths, const OptionSpec& opt);
PayoffPair digital(const CoupledPaths& paths, const OptionSpec& opt);

/// Dispatches on opt.kind.
PayoffPair evaluate(const CoupledPaths& paths, const OptionSpec& opt);

/// Simulates one constant-rate sample at `level` and evaluates it. At
/// level 0 the coarse value is 0.
PayoffPair payoff_pair(const ModelSpec& model, const OptionSpec& opt, int level,
                       PathStreams& streams);

}  // namespace mlmcjd
