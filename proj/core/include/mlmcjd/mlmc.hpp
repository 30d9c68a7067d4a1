#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "mlmcjd/intensity.hpp"
#include "mlmcjd/payoffs.hpp"

namespace mlmcjd {

/// How jumps are generated and coupled across levels.
enum class Method : std::uint8_t {
    ConstantRate,   ///< Poisson schedule shared by both paths
    ThinningQ,      ///< thinning, both paths accept with probability 1/2 and carry weights
    ThinningPlain,  ///< thinning, each path accepts with its own lambda / lambda_sup
    Cumulative,     ///< cumulative intensity, coarse path reweighted
};

std::string_view to_string(Method method);
/// Accepts the CLI names constant, thinning-q, thinning and cumulative.
Method parse_method(std::string_view name);

/// Throws std::invalid_argument if `method` cannot drive `model`.
void check_compatible(const ModelSpec& model, Method method);

/// Raw moments of one level. diff is P_l - P_{l-1} (P_0 at level 0) and
/// fine is P_l, both already multiplied by their likelihood weights.
struct LevelStats {
    int level = 0;
    std::uint64_t n = 0;
    double sum_diff = 0.0;
    double sum_diff2 = 0.0;
    double sum_fine = 0.0;
    double sum_fine2 = 0.0;
    /// Sum over samples of (jump-flagged points + 2^level).
    std::uint64_t cost = 0;

    double mean_diff() const;
    double var_diff() const;
    double mean_fine() const;
    double var_fine() const;
    double cost_per_sample() const;

    /// Appends the samples of `other` (same level).
    void merge(const LevelStats& other);
};

/// One coupled sample, with reusable buffers.
class LevelSampler {
public:
    LevelSampler(const ModelSpec& model, const OptionSpec& opt, Method method);

    struct Sample {
        double diff = 0.0;
        double fine = 0.0;
        std::uint32_t jump_points = 0;
    };

    Sample sample(int level, std::uint64_t seed, std::uint64_t path_index);

private:
    const ModelSpec& model_;
    OptionSpec opt_;
    Method method_;
    BridgeNeeds needs_;
    SinglePath single_;
    CoupledPaths coupled_;
    ThinningPaths thinning_;
    CumulativePaths cumulative_;
};

/// Runs samples first_path .. first_path + n - 1 of `level`. Paths are
/// split into fixed chunks spread over worker_count() threads and combined
/// in chunk order, so the result does not depend on the thread count.
/// A non-finite sample throws NumericalError naming level and path index.
LevelStats estimate_level(const ModelSpec& model, const OptionSpec& opt, Method method, int level,
                          std::uint64_t n, std::uint64_t seed, std::uint64_t first_path = 0);

/// MLMCJD_THREADS if set and positive, else the hardware concurrency.
unsigned worker_count();

struct Slopes {
    double alpha = 0.0;
    double beta = 0.0;
};

/// Least-squares slopes of -log2|mean diff| and -log2 var diff against the
/// level over levels >= first_level. Needs at least three such levels.
Slopes fit_slopes(const std::vector<LevelStats>& stats, int first_level = 2);

struct AdaptiveOptions {
    std::uint64_t n_initial = 100;
    int l_min = 2;
    int l_max = 20;
    int max_iterations = 200;
};

struct MlmcResult {
    double price = 0.0;
    double eps = 0.0;
    int levels = 0;  ///< finest level L
    std::vector<std::uint64_t> n_per_level;
    std::uint64_t total_cost = 0;
    double alpha = 0.0;
    double beta = 0.0;
    /// Sum of V_l / N_l.
    double estimator_variance = 0.0;
    double bias_estimate = 0.0;
    std::vector<LevelStats> stats;
};

/// Adaptive multilevel estimate with root-mean-square error about eps.
/// Throws std::runtime_error when the bias test still fails at l_max.
MlmcResult run_adaptive(const ModelSpec& model, const OptionSpec& opt, Method method, double eps,
                        std::uint64_t seed, const AdaptiveOptions& options = {});

/// |mean_fine_l - mean_fine_{l-1} - mean_diff_l| over three combined
/// standard errors; 0 at level 0. Values well above 1 flag an inconsistent
/// coupling.
double consistency_ratio(const LevelStats& prev, const LevelStats& cur);

}  // namespace mlmcjd
