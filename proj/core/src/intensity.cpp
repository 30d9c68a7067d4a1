#include "mlmcjd/intensity.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mlmcjd/errors.hpp"

namespace mlmcjd {

double thinning_factor(double p, bool accepted) { return accepted ? 2.0 * p : 2.0 * (1.0 - p); }

double acceptance_probability(const ModelSpec& model, double s_minus, double t) {
    const auto bound = model.rate_bound();
    if (!bound || !(*bound > 0.0)) throw std::invalid_argument("thinning requires a positive lambda_sup");
    const double p = model.jump_rate(s_minus, t) / *bound;
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::domain_error("thinning: acceptance probability " + std::to_string(p) +
                                " outside [0, 1]; lambda exceeds lambda_sup");
    }
    return p;
}

namespace {

double require_bound(const ModelSpec& model) {
    const auto bound = model.rate_bound();
    if (!bound || !(*bound > 0.0)) throw std::invalid_argument("thinning requires a positive lambda_sup");
    return *bound;
}

struct ThinningContext {
    const ModelSpec* model;
    std::vector<ThinningEvent>* events;
    bool change_of_measure;
};

JumpOutcome decide(const ThinningContext& ctx, std::size_t j, double s_minus, double t, bool fine) {
    ThinningEvent& ev = (*ctx.events)[j];
    const double p = acceptance_probability(*ctx.model, s_minus, t);
    JumpOutcome out;
    if (ctx.change_of_measure) {
        out.accepted = ev.uniform < 0.5;
        out.weight_factor = thinning_factor(p, out.accepted);
    } else {
        out.accepted = ev.uniform < p;
    }
    (fine ? ev.p_fine : ev.p_coarse) = p;
    (fine ? ev.accepted_fine : ev.accepted_coarse) = out.accepted;
    return out;
}

void draw_candidates(const ModelSpec& model, PathStreams& streams, JumpSchedule& jumps,
                     std::vector<ThinningEvent>& events) {
    poisson_schedule(require_bound(model), model.horizon, model.mark_mean, model.mark_variance,
                     streams.jump_waiting, streams.jump_mark, true, jumps);
    events.assign(jumps.size(), ThinningEvent{});
    for (std::size_t j = 0; j < jumps.size(); ++j) {
        events[j].time = jumps.times[j];
        events[j].uniform = streams.thinning_uniform.uniform();
    }
}

double next_threshold_increment(RngStream& stream) {
    double e;
    do {
        e = stream.exponential(1.0);
    } while (!(e > 0.0));
    return e;
}

}  // namespace

void thinning_coupled(const ModelSpec& model, int level, PathStreams& streams, BridgeNeeds needs,
                      bool change_of_measure, ThinningPaths& out) {
    if (level < 1) throw std::invalid_argument("thinning_coupled: level must be >= 1");
    CoupledPaths& p = out.paths;
    p.level = level;
    draw_candidates(model, streams, p.jumps, out.events);
    build_fine_grid(level, p.jumps.times, model.horizon, p.grid.fine);
    build_coupling(p.grid.fine, p.grid.coarse, p.grid.map);

    const ThinningContext ctx{&model, &out.events, change_of_measure};
    const ThinningContext* c = &ctx;
    const JumpRule fine_rule = [c](std::size_t j, double s, double t) { return decide(*c, j, s, t, true); };
    const JumpRule coarse_rule = [c](std::size_t j, double s, double t) { return decide(*c, j, s, t, false); };
    simulate_on_grid(model, p.grid.fine, p.jumps, streams, needs, fine_rule, p.fine);
    simulate_coarse(model, p.fine, p.grid.coarse, p.grid.map, p.jumps, coarse_rule, p.coarse);
    out.weights = {p.fine.likelihood_weight, p.coarse.likelihood_weight};
}

ThinningPaths thinning_coupled(const ModelSpec& model, int level, PathStreams& streams,
                               BridgeNeeds needs, bool change_of_measure) {
    ThinningPaths out;
    thinning_coupled(model, level, streams, needs, change_of_measure, out);
    return out;
}

void thinning_single(const ModelSpec& model, int level, PathStreams& streams, BridgeNeeds needs,
                     bool change_of_measure, SinglePath& out) {
    if (level < 0) throw std::invalid_argument("thinning_single: level must be >= 0");
    out.level = level;
    std::vector<ThinningEvent> events;
    draw_candidates(model, streams, out.jumps, events);
    build_fine_grid(level, out.jumps.times, model.horizon, out.grid);
    const ThinningContext ctx{&model, &events, change_of_measure};
    const ThinningContext* c = &ctx;
    const JumpRule rule = [c](std::size_t j, double s, double t) { return decide(*c, j, s, t, true); };
    simulate_on_grid(model, out.grid, out.jumps, streams, needs, rule, out.path);
}

void cumulative_single(const ModelSpec& model, int level, PathStreams& streams, BridgeNeeds needs,
                       SinglePath& out, CumulativeState* state) {
    if (level < 0 || level > 30) throw std::invalid_argument("cumulative_single: level out of range");
    const double horizon = model.horizon;
    const std::int64_t n = std::int64_t{1} << level;
    const double tol = kMergeTolerance * horizon;

    out.level = level;
    out.jumps.clear();
    out.path.clear();
    TimeGrid& grid = out.grid;
    grid.clear();
    grid.level = level;
    grid.h = horizon / static_cast<double>(n);
    grid.points.push_back(0.0);
    grid.is_jump.push_back(0);
    grid.uniform_index.push_back(0);
    grid.jump_offset.push_back(0);

    PathRecord& path = out.path;
    double s = model.initial_value;
    double t = 0.0;
    double integrated = 0.0;
    double threshold = next_threshold_increment(streams.cumulative_exponential);
    std::uint32_t count = 0;
    std::int64_t k = 1;
    while (k <= n) {
        const double tk = horizon * static_cast<double>(k) / static_cast<double>(n);
        const double lambda = model.jump_rate(s, t);
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
            throw NumericalError("cumulative intensity: jump rate " + std::to_string(lambda) + " at t=" +
                                 std::to_string(t));
        }
        const double reach = integrated + lambda * (tk - t);
        double t_next = tk;
        bool jump = false;
        bool uniform = true;
        if (lambda > 0.0 && reach > threshold) {
            const double tj = t + (threshold - integrated) / lambda;
            jump = true;
            if (tj < tk - tol) {
                t_next = tj;
                uniform = false;
            }
            integrated = threshold;
            threshold += next_threshold_increment(streams.cumulative_exponential);
        } else {
            integrated = reach;
        }

        StepRecord rec;
        rec.t_start = t;
        rec.t_end = t_next;
        rec.h = t_next - t;
        rec.s_start = s;
        rec.dW = std::sqrt(rec.h) * streams.brownian.normal();
        if (needs.integral) rec.dI = std::sqrt(rec.h * rec.h * rec.h / 12.0) * streams.bridge_integral.normal();
        if (needs.minimum) rec.u_min = 1.0 - streams.minimum_uniform.uniform();
        rec.a_step = model.drift(s, t);
        rec.b_step = model.volatility(s, t);
        const double db = model.volatility_derivative(s, t);
        rec.s_end_minus = s + rec.a_step * rec.h + rec.b_step * rec.dW +
                          0.5 * db * rec.b_step * (rec.dW * rec.dW - rec.h);
        rec.s_end = rec.s_end_minus;

        grid.points.push_back(t_next);
        grid.is_jump.push_back(jump ? 1 : 0);
        grid.uniform_index.push_back(uniform ? static_cast<std::int32_t>(k) : -1);
        grid.jump_offset.push_back(count);
        if (jump) {
            const double mark = streams.jump_mark.lognormal(model.mark_mean, model.mark_variance);
            out.jumps.push(t_next, mark);
            ++count;
            rec.s_end = apply_jump(model, rec.s_end_minus, t_next, mark);
            rec.jumped = true;
            ++path.jump_count;
            ++path.accepted_jumps;
        }
        path.steps.push_back(rec);
        if (uniform) ++k;
        s = rec.s_end;
        t = t_next;
    }
    grid.jump_offset.push_back(count);
    path.terminal = s;
    if (state) {
        state->lambda_running = integrated;
        state->e_target = threshold;
        state->jump_times = out.jumps.times;
    }
}

double cumulative_weight(const ModelSpec& model, const CoupledPaths& paths) {
    const auto& map = paths.grid.map;
    const auto& fine = paths.fine.steps;
    const auto& coarse = paths.coarse.steps;
    double exponent = 0.0;
    double ratio = 1.0;
    for (std::size_t c = 0; c < map.size(); ++c) {
        // coarse intensity is held over the whole coarse step
        const double lc = model.jump_rate(coarse[c].s_start, coarse[c].t_start);
        double lf = 0.0;
        for (std::uint32_t i = map[c].first_fine; i <= map[c].second_fine; ++i) {
            lf = model.jump_rate(fine[i].s_start, fine[i].t_start);
            exponent += (lf - lc) * fine[i].h;
        }
        if (paths.grid.coarse.is_jump[c + 1]) {
            if (!(lf > 0.0)) {
                throw NumericalError("cumulative weight: zero fine intensity at jump time " +
                                     std::to_string(coarse[c].t_end));
            }
            const std::uint32_t jumps = paths.grid.coarse.jump_offset[c + 2] - paths.grid.coarse.jump_offset[c + 1];
            for (std::uint32_t j = 0; j < jumps; ++j) ratio *= lc / lf;
        }
    }
    return std::exp(exponent) * ratio;
}

void cumulative_coupled(const ModelSpec& model, int level, PathStreams& streams, BridgeNeeds needs,
                        CumulativePaths& out) {
    if (level < 1) throw std::invalid_argument("cumulative_coupled: level must be >= 1");
    CoupledPaths& p = out.paths;
    p.level = level;
    // the fine generator writes straight into the coupled buffers
    SinglePath fine;
    fine.path = std::move(p.fine);
    fine.grid = std::move(p.grid.fine);
    fine.jumps = std::move(p.jumps);
    cumulative_single(model, level, streams, needs, fine);
    p.fine = std::move(fine.path);
    p.grid.fine = std::move(fine.grid);
    p.jumps = std::move(fine.jumps);

    build_coupling(p.grid.fine, p.grid.coarse, p.grid.map);
    simulate_coarse(model, p.fine, p.grid.coarse, p.grid.map, p.jumps, {}, p.coarse);
    out.weights = {1.0, cumulative_weight(model, p)};
    p.coarse.likelihood_weight = out.weights.coarse_weight;
}

CumulativePaths cumulative_coupled(const ModelSpec& model, int level, PathStreams& streams,
                                   BridgeNeeds needs) {
    CumulativePaths out;
    cumulative_coupled(model, level, streams, needs, out);
    return out;
}

}  // namespace mlmcjd
