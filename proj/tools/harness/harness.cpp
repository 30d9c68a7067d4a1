#include "harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlmcjd/errors.hpp"

namespace mlmcjd::harness {

namespace {

std::string header_line(std::uint64_t seed) {
    return "# mlmcjd v" + std::string(kVersion) + " seed=" + std::to_string(seed) + "\n";
}

void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ConfigError(field + ": " + what);
}

std::filesystem::path sibling(const std::string& out, const std::string& suffix) {
    const std::filesystem::path p(out);
    return p.parent_path() / (p.stem().string() + suffix);
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    return os;
}

void finish_output(std::ofstream& os, const std::filesystem::path& path) {
    os.flush();
    if (!os) throw IoError("failed writing '" + path.string() + "'");
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

}  // namespace

void RunConfig::validate() const {
    try {
        model.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (option.kind == OptionKind::Barrier) {
        require(option.barrier < model.s0 && option.barrier > 0.0, "option.barrier", "must lie in (0, model.s0)");
    }
    if (lambda_sup) require(*lambda_sup > 0.0 && std::isfinite(*lambda_sup), "model.lambda_sup", "must be positive");
    require(adaptive.n_initial >= 2, "n_initial", "must be >= 2");
    require(adaptive.l_min >= 1, "l_min", "must be >= 1");
    require(adaptive.l_max >= adaptive.l_min && adaptive.l_max <= 20, "l_max", "must lie in [l_min, 20]");

    switch (mode) {
        case Mode::Convergence:
        case Mode::CompareRates:
            require(levels >= 0 && levels <= 20, "levels", "must lie in [0, 20]");
            require(samples >= 2, "samples", "must be >= 2");
            break;
        case Mode::Price:
            require(!eps.empty(), "eps", "at least one value required");
            for (double e : eps) require(e > 0.0 && std::isfinite(e), "eps", "values must be positive");
            break;
    }
    if (mode == Mode::CompareRates) {
        require(rate == RateKind::StateDependent, "model.rate", "compare-rates needs the state-dependent rate");
        return;
    }
    try {
        check_compatible(build_model(*this), method);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("method: ") + e.what());
    }
}

ModelSpec build_model(const RunConfig& cfg) {
    if (cfg.rate == RateKind::Constant) return merton_model(cfg.model);
    ModelSpec m = state_dependent_model(cfg.model);
    if (cfg.lambda_sup) std::get<StateDependentRate>(m.rate).lambda_sup = *cfg.lambda_sup;
    return m;
}

OptionSpec build_option(const RunConfig& cfg) {
    OptionSpec opt = cfg.option;
    opt.strike = cfg.model.strike;
    opt.rate = cfg.model.r;
    opt.horizon = cfg.model.horizon;
    return opt;
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::vector<LevelStats> convergence_stats(const ModelSpec& model, const OptionSpec& opt, Method method,
                                          int levels, std::uint64_t samples, std::uint64_t seed) {
    std::vector<LevelStats> stats;
    for (int l = 0; l <= levels; ++l) stats.push_back(estimate_level(model, opt, method, l, samples, seed));
    return stats;
}

namespace {

void write_level_row(std::ostream& os, const LevelStats& s, const LevelStats* prev) {
    os << s.level << ',' << s.n << ',' << format_double(s.mean_diff()) << ',' << format_double(s.var_diff())
       << ',' << format_double(s.mean_fine()) << ',' << format_double(s.var_fine()) << ',' << s.cost << ','
       << format_double(prev ? consistency_ratio(*prev, s) : 0.0) << '\n';
}

constexpr const char* kLevelColumns = "level,N,mean_diff,var_diff,mean_fine,var_fine,cost,check_ratio";

}  // namespace

void write_convergence_csv(std::ostream& os, const std::vector<LevelStats>& stats, std::uint64_t seed) {
    os << header_line(seed) << kLevelColumns << '\n';
    for (std::size_t i = 0; i < stats.size(); ++i) write_level_row(os, stats[i], i ? &stats[i - 1] : nullptr);
}

void write_compare_rates(std::ostream& table, std::ostream& summary, const RunConfig& cfg) {
    const ModelSpec model = build_model(cfg);
    const OptionSpec opt = build_option(cfg);
    table << header_line(cfg.seed) << "method," << kLevelColumns << '\n';
    summary << header_line(cfg.seed) << "method,alpha,beta,level0_mean,level0_std_error\n";
    for (Method m : {Method::ThinningPlain, Method::ThinningQ, Method::Cumulative}) {
        const auto stats = convergence_stats(model, opt, m, cfg.levels, cfg.samples, cfg.seed);
        for (std::size_t i = 0; i < stats.size(); ++i) {
            table << to_string(m) << ',';
            write_level_row(table, stats[i], i ? &stats[i - 1] : nullptr);
        }
        Slopes slopes{std::nan(""), std::nan("")};
        if (cfg.levels >= 4) slopes = fit_slopes(stats, 2);
        const LevelStats& base = stats.front();
        summary << to_string(m) << ',' << format_double(slopes.alpha) << ',' << format_double(slopes.beta) << ','
                << format_double(base.mean_fine()) << ','
                << format_double(std::sqrt(base.var_fine() / static_cast<double>(base.n))) << '\n';
    }
}

void write_price(std::ostream& json, std::ostream* levels_csv, const RunConfig& cfg) {
    const ModelSpec model = build_model(cfg);
    const OptionSpec opt = build_option(cfg);
    nlohmann::ordered_json doc;
    doc["generator"] = "mlmcjd v" + std::string(kVersion);
    doc["seed"] = cfg.seed;
    doc["option"] = std::string(to_string(opt.kind));
    doc["method"] = std::string(to_string(cfg.method));
    doc["results"] = nlohmann::ordered_json::array();
    if (levels_csv) *levels_csv << header_line(cfg.seed) << "eps,level,N,mean_diff,var_diff,cost\n";

    for (double eps : cfg.eps) {
        const MlmcResult r = run_adaptive(model, opt, cfg.method, eps, cfg.seed, cfg.adaptive);
        nlohmann::ordered_json rec;
        rec["eps"] = eps;
        rec["price"] = r.price;
        rec["std_error"] = std::sqrt(r.estimator_variance);
        rec["levels"] = r.levels;
        rec["N_per_level"] = r.n_per_level;
        rec["total_cost"] = r.total_cost;
        rec["cost_times_eps2"] = static_cast<double>(r.total_cost) * eps * eps;
        doc["results"].push_back(std::move(rec));
        if (levels_csv) {
            for (const auto& s : r.stats) {
                *levels_csv << format_double(eps) << ',' << s.level << ',' << s.n << ','
                            << format_double(s.mean_diff()) << ',' << format_double(s.var_diff()) << ','
                            << s.cost << '\n';
            }
        }
    }
    json << doc.dump(2) << '\n';
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read config file '" + path + "'");
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    int number = 0;
    while (std::getline(is, line)) {
        ++number;
        const std::string text = trim(line);
        if (text.empty() || text.front() == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(number) + ": expected key=value");
        }
        std::string key = trim(std::string_view(text).substr(0, eq));
        std::string value = trim(std::string_view(text).substr(eq + 1));
        if (key.rfind("--", 0) == 0) key.erase(0, 2);
        if (key.empty()) throw ConfigError(path + ":" + std::to_string(number) + ": empty key");
        entries.emplace_back(std::move(key), std::move(value));
    }
    if (is.bad()) throw IoError("failed reading config file '" + path + "'");
    return entries;
}

namespace {

struct CliValues {
    std::string option = "vanilla";
    std::string method = "constant";
    std::string rate;
    std::string digital_case3 = "as-printed";
    std::optional<double> lambda_sup;
    std::string config;
};

void add_options(CLI::App& app, RunConfig& cfg, CliValues& v) {
    app.add_option("--option", v.option, "Payoff: vanilla, asian, lookback, barrier or digital")
        ->check(CLI::IsMember({"vanilla", "asian", "lookback", "barrier", "digital"}));
    app.add_option("--method", v.method, "Jump treatment: constant, thinning-q, thinning or cumulative")
        ->check(CLI::IsMember({"constant", "thinning-q", "thinning", "cumulative"}));
    app.add_option("--levels", cfg.levels, "Finest level of a convergence table");
    app.add_option("--samples", cfg.samples, "Paths per level of a convergence table");
    app.add_option("--eps", cfg.eps, "Target accuracy; repeat or separate with commas")->delimiter(',');
    app.add_option("--seed", cfg.seed, "Root seed of every random stream");
    app.add_option("--out", cfg.out, "Output file; stdout when omitted");
    app.add_option("--config", v.config, "Flat key=value file; command-line flags take precedence");

    app.add_option("--model.s0", cfg.model.s0, "Initial asset value");
    app.add_option("--model.T", cfg.model.horizon, "Maturity");
    app.add_option("--model.r", cfg.model.r, "Risk-free rate");
    app.add_option("--model.sigma", cfg.model.sigma, "Diffusion volatility");
    app.add_option("--model.lambda", cfg.model.lambda, "Constant jump rate");
    app.add_option("--model.mark_mean", cfg.model.mark_mean, "Mean of the log jump mark");
    app.add_option("--model.mark_variance", cfg.model.mark_variance, "Variance of the log jump mark");
    app.add_option("--model.rate", v.rate, "constant, or state for 1/(1+(S/S0)^2)")
        ->check(CLI::IsMember({"constant", "state"}));
    app.add_option("--model.lambda_sup", v.lambda_sup, "Thinning bound of the state-dependent rate");
    app.add_option("--option.strike", cfg.model.strike, "Strike");
    app.add_option("--option.barrier", cfg.option.barrier, "Down-and-out barrier level");
    app.add_option("--option.digital_case3", v.digital_case3,
                   "Coarse digital drift when the last jump is in the penultimate fine step")
        ->check(CLI::IsMember({"as-printed", "full-step"}));
    app.add_option("--n_initial", cfg.adaptive.n_initial, "Pilot samples per new level");
    app.add_option("--l_min", cfg.adaptive.l_min, "Coarsest finest-level of an adaptive run");
    app.add_option("--l_max", cfg.adaptive.l_max, "Level cap of an adaptive run");
}

bool flag_present(const std::vector<std::string>& tokens, const std::string& flag) {
    return std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) {
        return t == flag || t.rfind(flag + "=", 0) == 0;
    });
}

std::string find_config(const std::vector<std::string>& tokens) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] == "--config") {
            if (i + 1 >= tokens.size()) throw ConfigError("--config: missing file name");
            return tokens[i + 1];
        }
        if (tokens[i].rfind("--config=", 0) == 0) return tokens[i].substr(9);
    }
    return {};
}

void execute(const RunConfig& cfg, std::ostream& out) {
    const bool to_file = !cfg.out.empty();
    switch (cfg.mode) {
        case Mode::Convergence: {
            const auto stats =
                convergence_stats(build_model(cfg), build_option(cfg), cfg.method, cfg.levels, cfg.samples, cfg.seed);
            if (!to_file) {
                write_convergence_csv(out, stats, cfg.seed);
                return;
            }
            auto os = open_output(cfg.out);
            write_convergence_csv(os, stats, cfg.seed);
            finish_output(os, cfg.out);
            return;
        }
        case Mode::CompareRates: {
            std::ostringstream table, summary;
            write_compare_rates(table, summary, cfg);
            if (!to_file) {
                out << table.str() << '\n' << summary.str();
                return;
            }
            auto os = open_output(cfg.out);
            os << table.str();
            finish_output(os, cfg.out);
            const auto path = sibling(cfg.out, "_summary.csv");
            auto ss = open_output(path);
            ss << summary.str();
            finish_output(ss, path);
            return;
        }
        case Mode::Price: {
            std::ostringstream json, levels;
            write_price(json, to_file ? &levels : nullptr, cfg);
            if (!to_file) {
                out << json.str();
                return;
            }
            auto os = open_output(cfg.out);
            os << json.str();
            finish_output(os, cfg.out);
            const auto path = sibling(cfg.out, "_levels.csv");
            auto ls = open_output(path);
            ls << levels.str();
            finish_output(ls, path);
            return;
        }
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CliValues v;
    CLI::App app{"Multilevel Monte Carlo pricing for jump-diffusion models"};
    app.name("mlmcjd");
    app.set_version_flag("--version", "mlmcjd v" + std::string(kVersion));
    app.require_subcommand(1);
    app.fallthrough();
    auto* conv = app.add_subcommand("convergence", "Per-level means, variances and costs");
    auto* price = app.add_subcommand("price", "Adaptive multilevel prices for each --eps");
    auto* compare = app.add_subcommand("compare-rates", "Thinning, thinning with change of measure and "
                                                        "cumulative intensity side by side");
    add_options(app, cfg, v);

    try {
        std::vector<std::string> tokens(argv + 1, argv + argc);
        const std::string config_path = find_config(tokens);
        std::vector<std::string> merged;
        if (!config_path.empty()) {
            for (const auto& [key, value] : read_config_file(config_path)) {
                const std::string flag = "--" + key;
                if (key == "config" || app.get_option_no_throw(flag) == nullptr) {
                    throw ConfigError(config_path + ": unknown key '" + key + "'");
                }
                if (flag_present(tokens, flag)) continue;
                merged.push_back(flag);
                merged.push_back(value);
            }
        }
        merged.insert(merged.end(), tokens.begin(), tokens.end());
        std::reverse(merged.begin(), merged.end());
        app.parse(merged);

        if (conv->parsed()) cfg.mode = Mode::Convergence;
        if (price->parsed()) cfg.mode = Mode::Price;
        if (compare->parsed()) cfg.mode = Mode::CompareRates;
        cfg.option.kind = parse_option_kind(v.option);
        cfg.method = parse_method(v.method);
        const std::string rate = v.rate.empty() ? (cfg.mode == Mode::CompareRates ? "state" : "constant") : v.rate;
        cfg.rate = rate == "state" ? RateKind::StateDependent : RateKind::Constant;
        cfg.lambda_sup = v.lambda_sup;
        cfg.option.digital_case3 =
            v.digital_case3 == "full-step" ? DigitalCase3Drift::FullStep : DigitalCase3Drift::AsPrinted;
        cfg.validate();
        execute(cfg, out);
        out.flush();
        return 0;
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << '\n';
        return 4;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace mlmcjd::harness
