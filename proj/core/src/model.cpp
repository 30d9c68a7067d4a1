#include "mlmcjd/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mlmcjd/rng.hpp"

namespace mlmcjd {

namespace {

void require(bool ok, const char* field, const char* what) {
    if (!ok) {
        throw std::invalid_argument(std::string("MertonParams.") + field + " " + what);
    }
}

}  // namespace

double ModelSpec::constant_rate() const {
    if (const auto* c = std::get_if<ConstantRate>(&rate)) return c->lambda;
    throw std::logic_error("ModelSpec: jump rate is state dependent");
}

double ModelSpec::jump_rate(double s, double t) const {
    if (const auto* c = std::get_if<ConstantRate>(&rate)) return c->lambda;
    return std::get<StateDependentRate>(rate).lambda(s, t);
}

std::optional<double> ModelSpec::rate_bound() const {
    if (const auto* c = std::get_if<ConstantRate>(&rate)) return c->lambda;
    return std::get<StateDependentRate>(rate).lambda_sup;
}

void ModelSpec::validate() const {
    if (!drift || !volatility || !volatility_derivative || !jump_coefficient) {
        throw std::invalid_argument("ModelSpec: coefficient function missing");
    }
    if (!(initial_value > 0.0)) throw std::invalid_argument("ModelSpec.initial_value must be positive");
    if (!(horizon > 0.0)) throw std::invalid_argument("ModelSpec.horizon must be positive");
    if (const auto* c = std::get_if<ConstantRate>(&rate)) {
        if (!(c->lambda >= 0.0)) throw std::invalid_argument("ModelSpec.rate.lambda must be >= 0");
    } else {
        const auto& sd = std::get<StateDependentRate>(rate);
        if (!sd.lambda) throw std::invalid_argument("ModelSpec.rate.lambda function missing");
        if (sd.lambda_sup && !(*sd.lambda_sup > 0.0)) {
            throw std::invalid_argument("ModelSpec.rate.lambda_sup must be positive");
        }
    }
    const bool can_jump = !has_constant_rate() || constant_rate() > 0.0;
    if (can_jump && !(mark_variance > 0.0)) {
        throw std::invalid_argument("ModelSpec.mark_variance must be positive");
    }
}

double MertonParams::compensator() const { return std::exp(mark_mean + 0.5 * mark_variance) - 1.0; }

void MertonParams::validate() const {
    require(std::isfinite(r), "r", "must be finite");
    require(sigma > 0.0 && std::isfinite(sigma), "sigma", "must be positive");
    require(lambda >= 0.0 && std::isfinite(lambda), "lambda", "must be non-negative");
    require(std::isfinite(mark_mean), "mark_mean", "must be finite");
    require(mark_variance > 0.0 && std::isfinite(mark_variance), "mark_variance", "must be positive");
    require(s0 > 0.0 && std::isfinite(s0), "s0", "must be positive");
    require(strike > 0.0 && std::isfinite(strike), "strike", "must be positive");
    require(horizon > 0.0 && std::isfinite(horizon), "horizon", "must be positive");
}

ModelSpec merton_model(const MertonParams& p) {
    p.validate();
    const double mu = p.lambda > 0.0 ? p.r - p.lambda * p.compensator() : p.r;
    const double sigma = p.sigma;
    ModelSpec m;
    m.drift = [mu](double s, double) { return mu * s; };
    m.volatility = [sigma](double s, double) { return sigma * s; };
    m.volatility_derivative = [sigma](double, double) { return sigma; };
    m.jump_coefficient = [](double s, double) { return s; };
    m.rate = ConstantRate{p.lambda};
    m.mark_mean = p.mark_mean;
    m.mark_variance = p.mark_variance;
    m.initial_value = p.s0;
    m.horizon = p.horizon;
    return m;
}

ModelSpec state_dependent_model(const MertonParams& p) {
    p.validate();
    const double r = p.r;
    const double sigma = p.sigma;
    const double comp = p.compensator();
    const double s0 = p.s0;
    auto intensity = [s0](double s, double) {
        const double x = s / s0;
        return 1.0 / (1.0 + x * x);
    };
    ModelSpec m;
    m.drift = [r, comp, intensity](double s, double t) { return (r - intensity(s, t) * comp) * s; };
    m.volatility = [sigma](double s, double) { return sigma * s; };
    m.volatility_derivative = [sigma](double, double) { return sigma; };
    m.jump_coefficient = [](double s, double) { return s; };
    m.rate = StateDependentRate{intensity, 1.0};
    m.mark_mean = p.mark_mean;
    m.mark_variance = p.mark_variance;
    m.initial_value = p.s0;
    m.horizon = p.horizon;
    return m;
}

double black_scholes_call(double s0, double strike, double r, double sigma, double horizon) {
    const double vol = sigma * std::sqrt(horizon);
    const double d1 = (std::log(s0 / strike) + (r + 0.5 * sigma * sigma) * horizon) / vol;
    const double d2 = d1 - vol;
    return s0 * normal_cdf(d1) - strike * std::exp(-r * horizon) * normal_cdf(d2);
}

double merton_call_oracle(const MertonParams& p, int n_terms) {
    p.validate();
    if (n_terms < 1) throw std::invalid_argument("merton_call_oracle: n_terms must be >= 1");
    if (p.lambda == 0.0) return black_scholes_call(p.s0, p.strike, p.r, p.sigma, p.horizon);

    const double m = p.compensator();
    const double intensity = p.lambda * (1.0 + m) * p.horizon;
    const double log_jump = std::log1p(m);
    double weight = std::exp(-intensity);
    double price = 0.0;
    for (int n = 0; n <= n_terms; ++n) {
        if (n > 0) weight *= intensity / n;
        const double sigma_n = std::sqrt(p.sigma * p.sigma + n * p.mark_variance / p.horizon);
        const double r_n = p.r - p.lambda * m + n * log_jump / p.horizon;
        price += weight * black_scholes_call(p.s0, p.strike, r_n, sigma_n, p.horizon);
    }
    return price;
}

double merton_oracle_tail_bound(const MertonParams& p, int n_terms) {
    p.validate();
    if (p.lambda == 0.0) return 0.0;
    const double intensity = p.lambda * (1.0 + p.compensator()) * p.horizon;
    // tail = sum_{n > n_terms} pmf(n), summed directly to avoid cancellation
    double pmf = std::exp(-intensity);
    for (int n = 1; n <= n_terms + 1; ++n) pmf *= intensity / n;
    double tail = 0.0;
    for (int n = n_terms + 1; n < n_terms + 400 && pmf > 0.0; ++n) {
        tail += pmf;
        pmf *= intensity / (n + 1);
    }
    return tail * p.s0;
}

}  // namespace mlmcjd
