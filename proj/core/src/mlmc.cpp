#include "mlmcjd/mlmc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

#include "mlmcjd/errors.hpp"

namespace mlmcjd {

std::string_view to_string(Method method) {
    switch (method) {
        case Method::ConstantRate: return "constant";
        case Method::ThinningQ: return "thinning-q";
        case Method::ThinningPlain: return "thinning";
        case Method::Cumulative: return "cumulative";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    for (auto m : {Method::ConstantRate, Method::ThinningQ, Method::ThinningPlain, Method::Cumulative}) {
        if (name == to_string(m)) return m;
    }
    throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

void check_compatible(const ModelSpec& model, Method method) {
    switch (method) {
        case Method::ConstantRate:
            if (!model.has_constant_rate()) {
                throw std::invalid_argument("method constant requires a constant jump rate");
            }
            break;
        case Method::ThinningQ:
        case Method::ThinningPlain: {
            const auto bound = model.rate_bound();
            if (!bound || !(*bound > 0.0)) {
                throw std::invalid_argument("method " + std::string(to_string(method)) +
                                            " requires a positive lambda_sup");
            }
            break;
        }
        case Method::Cumulative: break;
    }
}

namespace {

// Neumaier compensated accumulator.
struct CompensatedSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double t = sum + x;
        if (std::fabs(sum) >= std::fabs(x)) {
            carry += (sum - t) + x;
        } else {
            carry += (x - t) + sum;
        }
        sum = t;
    }
    double value() const { return sum + carry; }
};

double sample_variance(double sum, double sum2, std::uint64_t n) {
    if (n < 2) return 0.0;
    const double nd = static_cast<double>(n);
    const double mean = sum / nd;
    return std::max((sum2 - nd * mean * mean) / (nd - 1.0), 0.0);
}

}  // namespace

double LevelStats::mean_diff() const { return n ? sum_diff / static_cast<double>(n) : 0.0; }
double LevelStats::var_diff() const { return sample_variance(sum_diff, sum_diff2, n); }
double LevelStats::mean_fine() const { return n ? sum_fine / static_cast<double>(n) : 0.0; }
double LevelStats::var_fine() const { return sample_variance(sum_fine, sum_fine2, n); }
double LevelStats::cost_per_sample() const {
    return n ? static_cast<double>(cost) / static_cast<double>(n) : 0.0;
}

void LevelStats::merge(const LevelStats& other) {
    if (other.n == 0) return;
    if (n != 0 && other.level != level) throw std::invalid_argument("LevelStats::merge: level mismatch");
    level = other.level;
    n += other.n;
    sum_diff += other.sum_diff;
    sum_diff2 += other.sum_diff2;
    sum_fine += other.sum_fine;
    sum_fine2 += other.sum_fine2;
    cost += other.cost;
}

LevelSampler::LevelSampler(const ModelSpec& model, const OptionSpec& opt, Method method)
    : model_(model), opt_(opt), method_(method), needs_(bridge_needs(opt.kind)) {
    check_compatible(model, method);
}

LevelSampler::Sample LevelSampler::sample(int level, std::uint64_t seed, std::uint64_t path_index) {
    PathStreams streams(seed, static_cast<std::uint32_t>(level), path_index);
    Sample out;
    if (level == 0) {
        switch (method_) {
            case Method::ConstantRate: simulate_single(model_, 0, streams, needs_, single_); break;
            case Method::ThinningQ: thinning_single(model_, 0, streams, needs_, true, single_); break;
            case Method::ThinningPlain: thinning_single(model_, 0, streams, needs_, false, single_); break;
            case Method::Cumulative: cumulative_single(model_, 0, streams, needs_, single_); break;
        }
        out.fine = fine_value(single_.path, opt_) * single_.path.likelihood_weight;
        out.diff = out.fine;
        out.jump_points = static_cast<std::uint32_t>(single_.jumps.size());
        return out;
    }

    const CoupledPaths* paths = nullptr;
    double wf = 1.0;
    double wc = 1.0;
    switch (method_) {
        case Method::ConstantRate:
            simulate_coupled(model_, level, streams, needs_, coupled_);
            paths = &coupled_;
            break;
        case Method::ThinningQ:
        case Method::ThinningPlain:
            thinning_coupled(model_, level, streams, needs_, method_ == Method::ThinningQ, thinning_);
            paths = &thinning_.paths;
            wf = thinning_.weights.fine_weight;
            wc = thinning_.weights.coarse_weight;
            break;
        case Method::Cumulative:
            cumulative_coupled(model_, level, streams, needs_, cumulative_);
            paths = &cumulative_.paths;
            wf = cumulative_.weights.fine_weight;
            wc = cumulative_.weights.coarse_weight;
            break;
    }
    const PayoffPair pair = evaluate(*paths, opt_);
    out.fine = pair.fine_value * wf;
    out.diff = out.fine - pair.coarse_value * wc;
    out.jump_points = static_cast<std::uint32_t>(paths->jumps.size());
    return out;
}

unsigned worker_count() {
    if (const char* env = std::getenv("MLMCJD_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(std::min<long>(v, 1024));
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

constexpr std::uint64_t kChunk = 2048;

struct ChunkSums {
    CompensatedSum diff, diff2, fine, fine2;
    std::uint64_t cost = 0;
};

void run_chunk(LevelSampler& sampler, int level, std::uint64_t seed, std::uint64_t begin,
               std::uint64_t end, ChunkSums& out) {
    const std::uint64_t grid_cost = std::uint64_t{1} << level;
    for (std::uint64_t i = begin; i < end; ++i) {
        const LevelSampler::Sample s = sampler.sample(level, seed, i);
        if (!std::isfinite(s.diff) || !std::isfinite(s.fine)) {
            throw NumericalError("non-finite payoff at level " + std::to_string(level) + ", path " +
                                 std::to_string(i) + " (seed " + std::to_string(seed) + ")");
        }
        out.diff.add(s.diff);
        out.diff2.add(s.diff * s.diff);
        out.fine.add(s.fine);
        out.fine2.add(s.fine * s.fine);
        out.cost += s.jump_points + grid_cost;
    }
}

}  // namespace

LevelStats estimate_level(const ModelSpec& model, const OptionSpec& opt, Method method, int level,
                          std::uint64_t n, std::uint64_t seed, std::uint64_t first_path) {
    if (level < 0 || level > 30) throw std::invalid_argument("estimate_level: level out of range");
    check_compatible(model, method);
    LevelStats stats;
    stats.level = level;
    if (n == 0) return stats;

    const std::uint64_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<ChunkSums> results(chunks);
    const unsigned workers = static_cast<unsigned>(std::min<std::uint64_t>(worker_count(), chunks));

    std::atomic<std::uint64_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::uint64_t error_chunk = chunks;
    std::mutex error_mutex;

    auto work = [&] {
        LevelSampler sampler(model, opt, method);
        while (!failed.load(std::memory_order_relaxed)) {
            const std::uint64_t c = next.fetch_add(1);
            if (c >= chunks) return;
            const std::uint64_t begin = first_path + c * kChunk;
            const std::uint64_t end = first_path + std::min(n, (c + 1) * kChunk);
            try {
                run_chunk(sampler, level, seed, begin, end, results[c]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                // keep the earliest failing chunk so the diagnostic is reproducible
                if (c < error_chunk) {
                    error_chunk = c;
                    error = std::current_exception();
                }
                failed = true;
            }
        }
    };

    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);

    CompensatedSum diff, diff2, fine, fine2;
    for (const ChunkSums& r : results) {
        diff.add(r.diff.value());
        diff2.add(r.diff2.value());
        fine.add(r.fine.value());
        fine2.add(r.fine2.value());
        stats.cost += r.cost;
    }
    stats.n = n;
    stats.sum_diff = diff.value();
    stats.sum_diff2 = diff2.value();
    stats.sum_fine = fine.value();
    stats.sum_fine2 = fine2.value();
    return stats;
}

Slopes fit_slopes(const std::vector<LevelStats>& stats, int first_level) {
    std::vector<double> x, ym, yv;
    for (const auto& s : stats) {
        if (s.level < first_level) continue;
        x.push_back(s.level);
        ym.push_back(std::log2(std::fabs(s.mean_diff())));
        yv.push_back(std::log2(s.var_diff()));
    }
    if (x.size() < 3) {
        throw std::invalid_argument("fit_slopes: need at least three levels >= " + std::to_string(first_level));
    }
    const auto slope = [&](const std::vector<double>& y) {
        const double n = static_cast<double>(x.size());
        const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
        const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sxy += (x[i] - mx) * (y[i] - my);
            sxx += (x[i] - mx) * (x[i] - mx);
        }
        return sxy / sxx;
    };
    return {-slope(ym), -slope(yv)};
}

double consistency_ratio(const LevelStats& prev, const LevelStats& cur) {
    if (cur.level == 0 || cur.n == 0 || prev.n == 0) return 0.0;
    const double num = std::fabs(cur.mean_diff() + prev.mean_fine() - cur.mean_fine());
    const double den = 3.0 * (std::sqrt(cur.var_diff() / static_cast<double>(cur.n)) +
                              std::sqrt(prev.var_fine() / static_cast<double>(prev.n)) +
                              std::sqrt(cur.var_fine() / static_cast<double>(cur.n)));
    return den > 0.0 ? num / den : 0.0;
}

namespace {

constexpr std::uint64_t kVarianceFloorSamples = 10;

}  // namespace

MlmcResult run_adaptive(const ModelSpec& model, const OptionSpec& opt, Method method, double eps,
                        std::uint64_t seed, const AdaptiveOptions& options) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("run_adaptive: eps must be positive");
    // the bias test compares two finest levels, so level 1 is the least it can use
    if (options.l_min < 1 || options.l_max < options.l_min || options.l_max > 30) {
        throw std::invalid_argument("run_adaptive: need 1 <= l_min <= l_max <= 30");
    }
    if (options.n_initial < 2) throw std::invalid_argument("run_adaptive: n_initial must be >= 2");
    check_compatible(model, method);

    int L = options.l_min;
    std::vector<LevelStats> stats(static_cast<std::size_t>(L) + 1);
    for (int l = 0; l <= L; ++l) stats[l].level = l;
    std::vector<std::uint64_t> extra(stats.size(), options.n_initial);

    MlmcResult result;
    result.eps = eps;
    double alpha = 1.0;
    double bias = 0.0;
    bool converged = false;
    for (int iter = 0; iter < options.max_iterations && !converged; ++iter) {
        for (std::size_t l = 0; l < stats.size(); ++l) {
            if (extra[l] == 0) continue;
            stats[l].merge(estimate_level(model, opt, method, static_cast<int>(l), extra[l], seed, stats[l].n));
        }

        // optimal allocation with the empirical, jump-aware cost per sample
        double total = 0.0;
        std::vector<double> v(stats.size()), c(stats.size());
        for (std::size_t l = 0; l < stats.size(); ++l) {
            v[l] = stats[l].var_diff();
            c[l] = stats[l].cost_per_sample();
            total += std::sqrt(v[l] * c[l]);
        }
        bool pending = false;
        for (std::size_t l = 0; l < stats.size(); ++l) {
            const double target = std::ceil(2.0 / (eps * eps) * std::sqrt(v[l] / c[l]) * total);
            const std::uint64_t want =
                std::max<std::uint64_t>(static_cast<std::uint64_t>(target), kVarianceFloorSamples);
            extra[l] = want > stats[l].n ? want - stats[l].n : 0;
            pending = pending || extra[l] > 0;
        }
        if (pending) continue;

        alpha = 1.0;
        if (L >= 4) {
            // Too flat a fitted slope would make the extrapolation blow up.
            alpha = std::max(fit_slopes(stats, 2).alpha, 0.5);
        }
        const double scale = std::pow(2.0, alpha);
        bias = std::max(std::fabs(stats[L].mean_diff()), std::fabs(stats[L - 1].mean_diff()) / scale) /
               (scale - 1.0);
        if (bias <= eps / std::sqrt(2.0)) {
            converged = true;
            break;
        }
        if (L == options.l_max) {
            throw std::runtime_error("run_adaptive: bias estimate " + std::to_string(bias) +
                                     " still exceeds eps/sqrt(2) = " + std::to_string(eps / std::sqrt(2.0)) +
                                     " at l_max = " + std::to_string(options.l_max));
        }
        ++L;
        stats.push_back(LevelStats{});
        stats.back().level = L;
        extra.push_back(options.n_initial);
    }
    if (!converged) {
        throw std::runtime_error("run_adaptive: no convergence within " + std::to_string(options.max_iterations) +
                                 " iterations");
    }

    result.levels = L;
    result.bias_estimate = bias;
    result.alpha = alpha;
    CompensatedSum price;
    for (const auto& s : stats) {
        price.add(s.mean_diff());
        result.n_per_level.push_back(s.n);
        result.total_cost += s.cost;
        result.estimator_variance += s.var_diff() / static_cast<double>(s.n);
    }
    result.price = price.value();
    if (L >= 4) {
        const Slopes fit = fit_slopes(stats, 2);
        result.alpha = fit.alpha;
        result.beta = fit.beta;
    } else {
        result.beta = std::numeric_limits<double>::quiet_NaN();
        result.alpha = std::numeric_limits<double>::quiet_NaN();
    }
    result.stats = std::move(stats);
    return result;
}

}  // namespace mlmcjd
