#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mlmcjd/mlmc.hpp"

namespace mlmcjd::harness {

inline constexpr std::string_view kVersion = "0.1.0";

enum class Mode : std::uint8_t { Convergence, Price, CompareRates };
enum class RateKind : std::uint8_t { Constant, StateDependent };

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    Mode mode = Mode::Convergence;
    MertonParams model;
    RateKind rate = RateKind::Constant;
    std::optional<double> lambda_sup;
    OptionSpec option;
    Method method = Method::ConstantRate;
    int levels = 8;
    std::uint64_t samples = 100000;
    std::vector<double> eps;
    std::uint64_t seed = 42;
    std::string out;
    AdaptiveOptions adaptive;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

ModelSpec build_model(const RunConfig& cfg);
/// Option with the model's strike, rate and horizon.
OptionSpec build_option(const RunConfig& cfg);

/// 17 significant digits, "nan"/"inf" for non-finite values.
std::string format_double(double x);

/// Levels 0..levels with `samples` paths each.
std::vector<LevelStats> convergence_stats(const ModelSpec& model, const OptionSpec& opt, Method method,
                                          int levels, std::uint64_t samples, std::uint64_t seed);

void write_convergence_csv(std::ostream& os, const std::vector<LevelStats>& stats, std::uint64_t seed);

/// Runs the three state-dependent methods side by side. The table gets a
/// leading method column; the summary holds fitted slopes and level-0 means.
void write_compare_rates(std::ostream& table, std::ostream& summary, const RunConfig& cfg);

/// Price records for every eps as a JSON document, plus the per-level
/// sample sizes as CSV.
void write_price(std::ostream& json, std::ostream* levels_csv, const RunConfig& cfg);

/// Parses a flat key=value file; keys are CLI flag names without "--".
/// Blank lines and lines starting with '#' are skipped.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path);

/// Whole command line: parsing, config merge, execution and exit code
/// (0 ok, 2 config error, 3 numerical failure, 4 I/O failure).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mlmcjd::harness
