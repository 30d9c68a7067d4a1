#include "mlmcjd/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace mlmcjd {

void JumpSchedule::clear() {
    times.clear();
    marks.clear();
    candidate_flags.clear();
}

void JumpSchedule::push(double time, double mark, bool candidate) {
    times.push_back(time);
    marks.push_back(mark);
    candidate_flags.push_back(candidate ? 1 : 0);
}

void JumpSchedule::validate() const {
    if (marks.size() != times.size() || candidate_flags.size() != times.size()) {
        throw std::invalid_argument("JumpSchedule: field lengths differ");
    }
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] > 0.0)) throw std::invalid_argument("JumpSchedule: jump time must be positive");
        if (i > 0 && !(times[i] > times[i - 1])) {
            throw std::invalid_argument("JumpSchedule: jump times must be strictly increasing");
        }
        if (!(marks[i] > 0.0)) throw std::invalid_argument("JumpSchedule: marks must be positive");
    }
}

void TimeGrid::clear() {
    points.clear();
    is_jump.clear();
    uniform_index.clear();
    jump_offset.clear();
    h = 0.0;
    level = 0;
}

std::vector<double> accumulate_jump_times(std::span<const double> waiting_times, double horizon) {
    std::vector<double> times;
    double t = 0.0;
    for (double w : waiting_times) {
        t += w;
        if (t > horizon) break;
        times.push_back(t);
    }
    return times;
}

void poisson_schedule(double rate, double horizon, double mark_mean, double mark_variance,
                      RngStream& waiting, RngStream& marks, bool candidates, JumpSchedule& out) {
    out.clear();
    if (rate == 0.0) return;
    double t = 0.0;
    for (;;) {
        t += waiting.exponential(rate);
        if (t > horizon) break;
        // a zero waiting time (u == 0 exactly) cannot start the schedule
        if (t <= 0.0 || (!out.times.empty() && t <= out.times.back())) continue;
        out.push(t, marks.lognormal(mark_mean, mark_variance), candidates);
    }
}

JumpSchedule constant_rate_jumps(const ModelSpec& model, RngStream& waiting, RngStream& marks) {
    JumpSchedule s;
    constant_rate_jumps(model, waiting, marks, s);
    return s;
}

void constant_rate_jumps(const ModelSpec& model, RngStream& waiting, RngStream& marks,
                         JumpSchedule& out) {
    poisson_schedule(model.constant_rate(), model.horizon, model.mark_mean, model.mark_variance,
                     waiting, marks, false, out);
}

namespace {

void push_point(TimeGrid& g, double t, std::int32_t uniform, std::uint32_t jumps_so_far) {
    g.points.push_back(t);
    g.is_jump.push_back(0);
    g.uniform_index.push_back(uniform);
    g.jump_offset.push_back(jumps_so_far);
}

}  // namespace

TimeGrid build_fine_grid(int level, std::span<const double> jump_times, double horizon) {
    TimeGrid g;
    build_fine_grid(level, jump_times, horizon, g);
    return g;
}

void build_fine_grid(int level, std::span<const double> jump_times, double horizon, TimeGrid& out) {
    if (level < 0 || level > 30) throw std::invalid_argument("build_fine_grid: level out of range");
    if (!(horizon > 0.0)) throw std::invalid_argument("build_fine_grid: horizon must be positive");
    out.clear();
    const std::int64_t n = std::int64_t{1} << level;
    const double tol = kMergeTolerance * horizon;
    out.level = level;
    out.h = horizon / static_cast<double>(n);
    out.points.reserve(static_cast<std::size_t>(n) + jump_times.size() + 1);

    // jump_offset[i] is the number of jumps before point i; attaching a jump
    // to the newest point only bumps the running count.
    std::uint32_t count = 0;
    auto attach = [&] {
        out.is_jump.back() = 1;
        ++count;
    };
    push_point(out, 0.0, 0, 0);
    std::size_t j = 0;
    for (std::int64_t k = 1; k <= n; ++k) {
        const double tk = horizon * static_cast<double>(k) / static_cast<double>(n);
        for (; j < jump_times.size() && jump_times[j] < tk - tol; ++j) {
            const double t = jump_times[j];
            if (!(t > 0.0)) throw std::invalid_argument("build_fine_grid: jump time must be positive");
            // t = 0 is never a jump point, so only later points absorb close jumps
            const bool mergeable = out.points.size() > 1 && t - out.points.back() < tol;
            if (!mergeable) push_point(out, t, -1, count);
            attach();
        }
        push_point(out, tk, static_cast<std::int32_t>(k), count);
        for (; j < jump_times.size() && jump_times[j] <= tk + tol; ++j) attach();
    }
    if (j < jump_times.size()) throw std::invalid_argument("build_fine_grid: jump time beyond horizon");
    out.jump_offset.push_back(count);
}

CoupledGrid build_coupling(const TimeGrid& fine) {
    CoupledGrid c;
    c.fine = fine;
    build_coupling(fine, c.coarse, c.map);
    return c;
}

void build_coupling(const TimeGrid& fine, TimeGrid& coarse, CoarseStepMap& map) {
    if (fine.level < 1) throw std::invalid_argument("build_coupling: level must be >= 1");
    coarse.clear();
    map.clear();
    coarse.level = fine.level - 1;
    coarse.h = 2.0 * fine.h;

    coarse.points.push_back(fine.points[0]);
    coarse.is_jump.push_back(fine.is_jump[0]);
    coarse.uniform_index.push_back(0);
    coarse.jump_offset.push_back(fine.jump_offset[0]);

    bool pending = false;
    std::uint32_t first = 0;
    const std::size_t steps = fine.steps();
    for (std::size_t s = 0; s < steps; ++s) {
        const std::size_t e = s + 1;
        const std::int32_t k = fine.uniform_index[e];
        const bool interior = k >= 0 && (k % 2) == 1 && !fine.is_jump[e];
        if (interior) {
            pending = true;
            first = static_cast<std::uint32_t>(s);
            continue;
        }
        CoarseStep step;
        if (pending) {
            const double t0 = fine.points[first];
            const double t1 = fine.points[e];
            step.kind = CoarseStep::Kind::Midpoint;
            step.first_fine = first;
            step.second_fine = static_cast<std::uint32_t>(s);
            step.split_fraction = (fine.points[s] - t0) / (t1 - t0);
            pending = false;
        } else {
            step.first_fine = step.second_fine = static_cast<std::uint32_t>(s);
        }
        map.push_back(step);
        coarse.points.push_back(fine.points[e]);
        coarse.is_jump.push_back(fine.is_jump[e]);
        coarse.uniform_index.push_back(k >= 0 && k % 2 == 0 ? k / 2 : -1);
        coarse.jump_offset.push_back(fine.jump_offset[e]);
    }
    coarse.jump_offset.push_back(fine.jump_offset.back());
}

}  // namespace mlmcjd
