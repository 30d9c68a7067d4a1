#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mlmcjd/model.hpp"
#include "mlmcjd/rng.hpp"

namespace mlmcjd {

/// Jump (or thinning-candidate) times in (0, T] with their marks.
struct JumpSchedule {
    std::vector<double> times;
    std::vector<double> marks;
    /// True for thinning candidates that still await acceptance.
    std::vector<std::uint8_t> candidate_flags;

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }
    void clear();
    void push(double time, double mark, bool candidate = false);
    /// Throws std::invalid_argument if times are not strictly increasing,
    /// a mark is not positive, or the lengths differ.
    void validate() const;
};

/// Jump-adapted grid 0 = t_0 < ... < t_M = T: the multiples of the uniform
/// step h merged with the jump times.
struct TimeGrid {
    std::vector<double> points;
    std::vector<std::uint8_t> is_jump;
    /// Index k for the uniform point k*h, -1 for a jump-only point.
    std::vector<std::int32_t> uniform_index;
    /// Jumps at point i are schedule entries [jump_offset[i], jump_offset[i+1]).
    std::vector<std::uint32_t> jump_offset;
    double h = 0.0;
    int level = 0;

    std::size_t steps() const { return points.empty() ? 0 : points.size() - 1; }
    double horizon() const { return points.back(); }
    void clear();
};

struct CoarseStep {
    enum class Kind : std::uint8_t { Single, Midpoint };
    Kind kind = Kind::Single;
    std::uint32_t first_fine = 0;
    /// Equal to first_fine for Single steps.
    std::uint32_t second_fine = 0;
    /// (t' - t_n) / (t_{n+1} - t_n) for the interior fine point t'; 1 for Single.
    double split_fraction = 1.0;
};

using CoarseStepMap = std::vector<CoarseStep>;

struct CoupledGrid {
    TimeGrid fine;
    TimeGrid coarse;
    CoarseStepMap map;
};

/// Times within this fraction of T of each other are treated as one point.
inline constexpr double kMergeTolerance = 1e-12;

/// Cumulative sums of the waiting times that stay within (0, horizon].
std::vector<double> accumulate_jump_times(std::span<const double> waiting_times, double horizon);

/// Poisson(rate) arrival times on (0, T] from `waiting`, one lognormal mark
/// per arrival from `marks`. rate == 0 gives an empty schedule.
void poisson_schedule(double rate, double horizon, double mark_mean, double mark_variance,
                      RngStream& waiting, RngStream& marks, bool candidates, JumpSchedule& out);

/// Jump schedule for a constant-rate model.
JumpSchedule constant_rate_jumps(const ModelSpec& model, RngStream& waiting, RngStream& marks);
void constant_rate_jumps(const ModelSpec& model, RngStream& waiting, RngStream& marks,
                         JumpSchedule& out);

TimeGrid build_fine_grid(int level, std::span<const double> jump_times, double horizon);
void build_fine_grid(int level, std::span<const double> jump_times, double horizon, TimeGrid& out);

/// Coarse grid at step 2h sharing the fine grid's jump points, and the
/// map from coarse steps to the one or two fine steps they cover.
CoupledGrid build_coupling(const TimeGrid& fine);
void build_coupling(const TimeGrid& fine, TimeGrid& coarse, CoarseStepMap& map);

}  // namespace mlmcjd
