#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "mlmcjd/grid.hpp"
#include "mlmcjd/model.hpp"
#include "mlmcjd/rng.hpp"

namespace mlmcjd {

inline constexpr double kNotDrawn = std::numeric_limits<double>::quiet_NaN();

/// One step of a jump-adapted Milstein path. Coefficients are frozen at
/// the step start; s_end_minus is the left limit before any jump at t_end.
struct StepRecord {
    double t_start = 0.0;
    double t_end = 0.0;
    double h = 0.0;
    double dW = 0.0;
    double dI = kNotDrawn;
    double u_min = kNotDrawn;
    double s_start = 0.0;
    double s_end_minus = 0.0;
    double s_end = 0.0;
    double a_step = 0.0;
    double b_step = 0.0;
    bool jumped = false;
};

struct PathRecord {
    std::vector<StepRecord> steps;
    double terminal = 0.0;
    /// Jump-flagged grid points (jumps, or thinning candidates).
    std::uint32_t jump_count = 0;
    std::uint32_t accepted_jumps = 0;
    double likelihood_weight = 1.0;

    void clear();
};

/// Which optional bridge variables the payoff needs on fine steps.
struct BridgeNeeds {
    bool integral = false;
    bool minimum = false;
};

/// The keyed streams used by one sample (seed, level, path index).
struct PathStreams {
    PathStreams(std::uint64_t seed, std::uint32_t level, std::uint64_t path_index);

    RngStream brownian;
    RngStream bridge_integral;
    RngStream minimum_uniform;
    RngStream jump_waiting;
    RngStream jump_mark;
    RngStream thinning_uniform;
    RngStream cumulative_exponential;
};

struct JumpOutcome {
    bool accepted = true;
    double weight_factor = 1.0;
};

/// Decides schedule entry `jump_index` at time t given the pre-jump state.
/// An empty rule accepts every jump.
using JumpRule = std::function<JumpOutcome(std::size_t jump_index, double s_minus, double t)>;

/// Everything one coupled sample produces; reused across samples so the
/// vectors keep their capacity.
struct CoupledPaths {
    PathRecord fine;
    PathRecord coarse;
    CoupledGrid grid;
    JumpSchedule jumps;
    int level = 0;
};

struct SinglePath {
    PathRecord path;
    TimeGrid grid;
    JumpSchedule jumps;
    int level = 0;
};

/// S + a h + b dW + 1/2 b' b (dW^2 - h), coefficients at (s, t).
double milstein_step(const ModelSpec& model, double s, double t, double h, double dW);

/// S- + c(S-, t) (Y - 1).
double apply_jump(const ModelSpec& model, double s_minus, double t, double mark);

/// Bridge integral over the union of two adjacent steps of lengths h1, h2.
double coarse_bridge_integral(double dI1, double dI2, double dW1, double dW2, double h1, double h2);

/// Steps `model` across `grid` drawing fresh increments from `streams`.
void simulate_on_grid(const ModelSpec& model, const TimeGrid& grid, const JumpSchedule& jumps,
                      PathStreams& streams, BridgeNeeds needs, const JumpRule& rule,
                      PathRecord& out);

/// Coarse path on `coarse`, driven by the fine path's increments through
/// `map`. Coefficients are evaluated at coarse states.
void simulate_coarse(const ModelSpec& model, const PathRecord& fine, const TimeGrid& coarse,
                     const CoarseStepMap& map, const JumpSchedule& jumps, const JumpRule& rule,
                     PathRecord& out);

/// Constant-rate coupled sample at `level` >= 1.
void simulate_coupled(const ModelSpec& model, int level, PathStreams& streams, BridgeNeeds needs,
                      CoupledPaths& out);
CoupledPaths simulate_coupled(const ModelSpec& model, int level, PathStreams& streams,
                              BridgeNeeds needs = {});

/// Constant-rate uncoupled sample at `level` >= 0.
void simulate_single(const ModelSpec& model, int level, PathStreams& streams, BridgeNeeds needs,
                     SinglePath& out);
PathRecord simulate_single(const ModelSpec& model, int level, PathStreams& streams,
                           BridgeNeeds needs = {});

}  // namespace mlmcjd
