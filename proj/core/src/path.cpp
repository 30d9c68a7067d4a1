#include "mlmcjd/path.hpp"

#include <cmath>
#include <stdexcept>

namespace mlmcjd {

void PathRecord::clear() {
    steps.clear();
    terminal = 0.0;
    jump_count = 0;
    accepted_jumps = 0;
    likelihood_weight = 1.0;
}

PathStreams::PathStreams(std::uint64_t seed, std::uint32_t level, std::uint64_t path_index)
    : brownian({seed, level, path_index, Purpose::BrownianIncrement}),
      bridge_integral({seed, level, path_index, Purpose::BridgeIntegral}),
      minimum_uniform({seed, level, path_index, Purpose::MinimumUniform}),
      jump_waiting({seed, level, path_index, Purpose::JumpWaiting}),
      jump_mark({seed, level, path_index, Purpose::JumpMark}),
      thinning_uniform({seed, level, path_index, Purpose::ThinningUniform}),
      cumulative_exponential({seed, level, path_index, Purpose::CumulativeExponential}) {}

double milstein_step(const ModelSpec& model, double s, double t, double h, double dW) {
    const double a = model.drift(s, t);
    const double b = model.volatility(s, t);
    const double db = model.volatility_derivative(s, t);
    return s + a * h + b * dW + 0.5 * db * b * (dW * dW - h);
}

double apply_jump(const ModelSpec& model, double s_minus, double t, double mark) {
    return s_minus + model.jump_coefficient(s_minus, t) * (mark - 1.0);
}

double coarse_bridge_integral(double dI1, double dI2, double dW1, double dW2, double h1, double h2) {
    // 1/2 H (mu dW1 - (1 - mu) dW2) with mu = h2 / H
    return dI1 + dI2 + 0.5 * (h2 * dW1 - h1 * dW2);
}

namespace {

// Advances one diffusion step and fills the record.
inline void diffuse(const ModelSpec& model, StepRecord& rec) {
    const double s = rec.s_start;
    const double t = rec.t_start;
    const double a = model.drift(s, t);
    const double b = model.volatility(s, t);
    const double db = model.volatility_derivative(s, t);
    const double h = rec.h;
    const double dW = rec.dW;
    rec.a_step = a;
    rec.b_step = b;
    rec.s_end_minus = s + a * h + b * dW + 0.5 * db * b * (dW * dW - h);
    rec.s_end = rec.s_end_minus;
}

// Applies every schedule entry attached to a grid point.
inline void jump_at(const ModelSpec& model, const JumpSchedule& jumps, std::uint32_t begin,
                    std::uint32_t end, const JumpRule& rule, StepRecord& rec, PathRecord& path) {
    ++path.jump_count;
    for (std::uint32_t j = begin; j < end; ++j) {
        JumpOutcome outcome;
        if (rule) outcome = rule(j, rec.s_end, rec.t_end);
        path.likelihood_weight *= outcome.weight_factor;
        if (outcome.accepted) {
            rec.s_end = apply_jump(model, rec.s_end, rec.t_end, jumps.marks[j]);
            rec.jumped = true;
            ++path.accepted_jumps;
        }
    }
}

}  // namespace

void simulate_on_grid(const ModelSpec& model, const TimeGrid& grid, const JumpSchedule& jumps,
                      PathStreams& streams, BridgeNeeds needs, const JumpRule& rule,
                      PathRecord& out) {
    out.clear();
    const std::size_t n = grid.steps();
    out.steps.resize(n);
    double s = model.initial_value;
    for (std::size_t k = 0; k < n; ++k) {
        StepRecord& rec = out.steps[k];
        rec = StepRecord{};
        rec.t_start = grid.points[k];
        rec.t_end = grid.points[k + 1];
        rec.h = rec.t_end - rec.t_start;
        rec.s_start = s;
        rec.dW = std::sqrt(rec.h) * streams.brownian.normal();
        if (needs.integral) {
            rec.dI = std::sqrt(rec.h * rec.h * rec.h / 12.0) * streams.bridge_integral.normal();
        }
        if (needs.minimum) rec.u_min = 1.0 - streams.minimum_uniform.uniform();
        diffuse(model, rec);
        if (grid.is_jump[k + 1]) {
            jump_at(model, jumps, grid.jump_offset[k + 1], grid.jump_offset[k + 2], rule, rec, out);
        }
        s = rec.s_end;
    }
    out.terminal = s;
}

void simulate_coarse(const ModelSpec& model, const PathRecord& fine, const TimeGrid& coarse,
                     const CoarseStepMap& map, const JumpSchedule& jumps, const JumpRule& rule,
                     PathRecord& out) {
    out.clear();
    const std::size_t n = map.size();
    if (coarse.steps() != n) throw std::invalid_argument("simulate_coarse: map and grid disagree");
    out.steps.resize(n);
    double s = model.initial_value;
    for (std::size_t c = 0; c < n; ++c) {
        const CoarseStep& cs = map[c];
        const StepRecord& f1 = fine.steps[cs.first_fine];
        StepRecord& rec = out.steps[c];
        rec = StepRecord{};
        rec.t_start = coarse.points[c];
        rec.t_end = coarse.points[c + 1];
        rec.h = rec.t_end - rec.t_start;
        rec.s_start = s;
        if (cs.kind == CoarseStep::Kind::Single) {
            rec.dW = f1.dW;
            rec.dI = f1.dI;
            rec.u_min = f1.u_min;
        } else {
            const StepRecord& f2 = fine.steps[cs.second_fine];
            rec.dW = f1.dW + f2.dW;
            rec.dI = coarse_bridge_integral(f1.dI, f2.dI, f1.dW, f2.dW, f1.h, f2.h);
        }
        diffuse(model, rec);
        if (coarse.is_jump[c + 1]) {
            jump_at(model, jumps, coarse.jump_offset[c + 1], coarse.jump_offset[c + 2], rule, rec, out);
        }
        s = rec.s_end;
    }
    out.terminal = s;
}

void simulate_coupled(const ModelSpec& model, int level, PathStreams& streams, BridgeNeeds needs,
                      CoupledPaths& out) {
    if (level < 1) throw std::invalid_argument("simulate_coupled: level must be >= 1");
    out.level = level;
    constant_rate_jumps(model, streams.jump_waiting, streams.jump_mark, out.jumps);
    build_fine_grid(level, out.jumps.times, model.horizon, out.grid.fine);
    build_coupling(out.grid.fine, out.grid.coarse, out.grid.map);
    simulate_on_grid(model, out.grid.fine, out.jumps, streams, needs, {}, out.fine);
    simulate_coarse(model, out.fine, out.grid.coarse, out.grid.map, out.jumps, {}, out.coarse);
}

CoupledPaths simulate_coupled(const ModelSpec& model, int level, PathStreams& streams,
                              BridgeNeeds needs) {
    CoupledPaths out;
    simulate_coupled(model, level, streams, needs, out);
    return out;
}

void simulate_single(const ModelSpec& model, int level, PathStreams& streams, BridgeNeeds needs,
                     SinglePath& out) {
    if (level < 0) throw std::invalid_argument("simulate_single: level must be >= 0");
    out.level = level;
    constant_rate_jumps(model, streams.jump_waiting, streams.jump_mark, out.jumps);
    build_fine_grid(level, out.jumps.times, model.horizon, out.grid);
    simulate_on_grid(model, out.grid, out.jumps, streams, needs, {}, out.path);
}

PathRecord simulate_single(const ModelSpec& model, int level, PathStreams& streams,
                           BridgeNeeds needs) {
    SinglePath out;
    simulate_single(model, level, streams, needs, out);
    return std::move(out.path);
}

}  // namespace mlmcjd
