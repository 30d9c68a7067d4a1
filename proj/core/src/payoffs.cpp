#include "mlmcjd/payoffs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mlmcjd {

double OptionSpec::discount() const { return std::exp(-rate * horizon); }

void OptionSpec::validate(double s0) const {
    if (!(strike > 0.0 && std::isfinite(strike))) throw std::invalid_argument("OptionSpec.strike must be positive");
    if (!std::isfinite(rate)) throw std::invalid_argument("OptionSpec.rate must be finite");
    if (!(horizon > 0.0)) throw std::invalid_argument("OptionSpec.horizon must be positive");
    if (kind == OptionKind::Barrier && !(barrier < s0)) {
        throw std::invalid_argument("OptionSpec.barrier must lie below S0 for a down-and-out option");
    }
}

std::string_view to_string(OptionKind kind) {
    switch (kind) {
        case OptionKind::Vanilla: return "vanilla";
        case OptionKind::Asian: return "asian";
        case OptionKind::Lookback: return "lookback";
        case OptionKind::Barrier: return "barrier";
        case OptionKind::Digital: return "digital";
    }
    return "unknown";
}

OptionKind parse_option_kind(std::string_view name) {
    for (auto k : {OptionKind::Vanilla, OptionKind::Asian, OptionKind::Lookback, OptionKind::Barrier,
                   OptionKind::Digital}) {
        if (name == to_string(k)) return k;
    }
    throw std::invalid_argument("unknown option kind '" + std::string(name) + "'");
}

BridgeNeeds bridge_needs(OptionKind kind) {
    return {kind == OptionKind::Asian, kind == OptionKind::Lookback};
}

double bridge_minimum(double s0, double s1, double b, double h, double u) {
    const double d = s1 - s0;
    return 0.5 * (s0 + s1 - std::sqrt(d * d - 2.0 * b * b * h * std::log(u)));
}

double survival_probability(double s0, double s1, double barrier, double b, double h) {
    const double above = std::max(s0 - barrier, 0.0) * std::max(s1 - barrier, 0.0);
    if (above == 0.0) return 0.0;
    const double var = b * b * h;
    if (var == 0.0) return 1.0;
    return -std::expm1(-2.0 * above / var);
}

double brownian_interpolant(double s0, double s1, double b, double dW_first, double dW_total,
                            double mu) {
    return s0 + mu * (s1 - s0) + b * (dW_first - mu * dW_total);
}

double smoothed_digital(double x, double b, double h) {
    const double scale = std::fabs(b) * std::sqrt(h);
    if (scale == 0.0) return x > 0.0 ? 1.0 : (x == 0.0 ? 0.5 : 0.0);
    return normal_cdf(x / scale);
}

namespace {

double average_fine(const PathRecord& path, double horizon) {
    double sum = 0.0;
    for (const auto& st : path.steps) sum += 0.5 * st.h * (st.s_start + st.s_end_minus) + st.b_step * st.dI;
    return sum / horizon;
}

double minimum_fine(const PathRecord& path) {
    double m = path.terminal;
    for (const auto& st : path.steps) {
        m = std::min(m, bridge_minimum(st.s_start, st.s_end_minus, st.b_step, st.h, st.u_min));
    }
    return m;
}

double survival_fine(const PathRecord& path, double barrier) {
    double p = 1.0;
    for (const auto& st : path.steps) {
        p *= survival_probability(st.s_start, st.s_end_minus, barrier, st.b_step, st.h);
        if (p == 0.0) break;
    }
    return p;
}

double digital_fine(const PathRecord& path, double strike) {
    const StepRecord& last = path.steps.back();
    return smoothed_digital(last.s_start + last.a_step * last.h - strike, last.b_step, last.h);
}

void require_kind(const OptionSpec& opt, OptionKind kind) {
    if (opt.kind != kind) throw std::invalid_argument("payoff estimator called with the wrong option kind");
}

}  // namespace

double fine_value(const PathRecord& path, const OptionSpec& opt) {
    const double df = opt.discount();
    switch (opt.kind) {
        case OptionKind::Vanilla: return df * std::max(path.terminal - opt.strike, 0.0);
        case OptionKind::Asian: return df * std::max(average_fine(path, opt.horizon) - opt.strike, 0.0);
        case OptionKind::Lookback: return df * (path.terminal - minimum_fine(path));
        case OptionKind::Barrier:
            return df * std::max(path.terminal - opt.strike, 0.0) * survival_fine(path, opt.barrier);
        case OptionKind::Digital: return df * digital_fine(path, opt.strike);
    }
    throw std::invalid_argument("fine_value: unknown option kind");
}

PayoffPair vanilla(const CoupledPaths& paths, const OptionSpec& opt) {
    require_kind(opt, OptionKind::Vanilla);
    const double df = opt.discount();
    return {df * std::max(paths.fine.terminal - opt.strike, 0.0),
            df * std::max(paths.coarse.terminal - opt.strike, 0.0)};
}

PayoffPair asian(const CoupledPaths& paths, const OptionSpec& opt) {
    require_kind(opt, OptionKind::Asian);
    // coarse dI on midpoint steps is reconstructed during coarse simulation
    const double df = opt.discount();
    return {df * std::max(average_fine(paths.fine, opt.horizon) - opt.strike, 0.0),
            df * std::max(average_fine(paths.coarse, opt.horizon) - opt.strike, 0.0)};
}

PayoffPair lookback(const CoupledPaths& paths, const OptionSpec& opt) {
    require_kind(opt, OptionKind::Lookback);
    const auto& map = paths.grid.map;
    const auto& fine = paths.fine.steps;
    double m = paths.coarse.terminal;
    for (std::size_t c = 0; c < map.size(); ++c) {
        const StepRecord& st = paths.coarse.steps[c];
        const StepRecord& f1 = fine[map[c].first_fine];
        if (map[c].kind == CoarseStep::Kind::Single) {
            m = std::min(m, bridge_minimum(st.s_start, st.s_end_minus, st.b_step, st.h, f1.u_min));
            continue;
        }
        const StepRecord& f2 = fine[map[c].second_fine];
        const double mid = brownian_interpolant(st.s_start, st.s_end_minus, st.b_step, f1.dW, st.dW,
                                                map[c].split_fraction);
        m = std::min(m, bridge_minimum(st.s_start, mid, st.b_step, f1.h, f1.u_min));
        m = std::min(m, bridge_minimum(mid, st.s_end_minus, st.b_step, f2.h, f2.u_min));
    }
    const double df = opt.discount();
    return {df * (paths.fine.terminal - minimum_fine(paths.fine)), df * (paths.coarse.terminal - m)};
}

PayoffPair barrier(const CoupledPaths& paths, const OptionSpec& opt) {
    require_kind(opt, OptionKind::Barrier);
    const auto& map = paths.grid.map;
    const auto& fine = paths.fine.steps;
    const double B = opt.barrier;
    double p = 1.0;
    for (std::size_t c = 0; c < map.size() && p > 0.0; ++c) {
        const StepRecord& st = paths.coarse.steps[c];
        if (map[c].kind == CoarseStep::Kind::Single) {
            p *= survival_probability(st.s_start, st.s_end_minus, B, st.b_step, st.h);
            continue;
        }
        const StepRecord& f1 = fine[map[c].first_fine];
        const StepRecord& f2 = fine[map[c].second_fine];
        const double mid = brownian_interpolant(st.s_start, st.s_end_minus, st.b_step, f1.dW, st.dW,
                                                map[c].split_fraction);
        p *= survival_probability(st.s_start, mid, B, st.b_step, f1.h) *
             survival_probability(mid, st.s_end_minus, B, st.b_step, f2.h);
    }
    const double df = opt.discount();
    return {df * std::max(paths.fine.terminal - opt.strike, 0.0) * survival_fine(paths.fine, B),
            df * std::max(paths.coarse.terminal - opt.strike, 0.0) * p};
}

DigitalCase classify_digital(const CoupledPaths& paths) {
    const CoarseStep& last = paths.grid.map.back();
    if (last.kind == CoarseStep::Kind::Single) return DigitalCase::LastStep;
    return paths.grid.fine.uniform_index[last.first_fine] >= 0 ? DigitalCase::NoLateJump
                                                               : DigitalCase::PenultimateStep;
}

PayoffPair digital(const CoupledPaths& paths, const OptionSpec& opt) {
    require_kind(opt, OptionKind::Digital);
    const double df = opt.discount();
    const double fine = digital_fine(paths.fine, opt.strike);

    const CoarseStep& last = paths.grid.map.back();
    const StepRecord& st = paths.coarse.steps.back();
    double coarse;
    switch (classify_digital(paths)) {
        case DigitalCase::LastStep:
            coarse = smoothed_digital(st.s_start + st.a_step * st.h - opt.strike, st.b_step, st.h);
            break;
        case DigitalCase::NoLateJump:
        case DigitalCase::PenultimateStep: {
            const StepRecord& f1 = paths.fine.steps[last.first_fine];
            const StepRecord& f2 = paths.fine.steps[last.second_fine];
            const bool printed = classify_digital(paths) == DigitalCase::PenultimateStep &&
                                 opt.digital_case3 == DigitalCase3Drift::AsPrinted;
            const double drift_time = printed ? f1.h : f1.h + f2.h;
            coarse = smoothed_digital(st.s_start + st.a_step * drift_time + st.b_step * f1.dW - opt.strike,
                                      st.b_step, f2.h);
            break;
        }
        default: throw std::logic_error("digital: unreachable case");
    }
    return {df * fine, df * coarse};
}

PayoffPair evaluate(const CoupledPaths& paths, const OptionSpec& opt) {
    switch (opt.kind) {
        case OptionKind::Vanilla: return vanilla(paths, opt);
        case OptionKind::Asian: return asian(paths, opt);
        case OptionKind::Lookback: return lookback(paths, opt);
        case OptionKind::Barrier: return barrier(paths, opt);
        case OptionKind::Digital: return digital(paths, opt);
    }
    throw std::invalid_argument("evaluate: unknown option kind");
}

PayoffPair payoff_pair(const ModelSpec& model, const OptionSpec& opt, int level,
                       PathStreams& streams) {
    if (level == 0) {
        SinglePath single;
        simulate_single(model, 0, streams, bridge_needs(opt.kind), single);
        return {fine_value(single.path, opt), 0.0};
    }
    CoupledPaths paths;
    simulate_coupled(model, level, streams, bridge_needs(opt.kind), paths);
    return evaluate(paths, opt);
}

}  // namespace mlmcjd
