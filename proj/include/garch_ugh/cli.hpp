#pragma once

// Command-line front end. Kept in a header so tests can drive it in-process.
//
// Exit codes: 0 success, 1 validation (bad flags, config, input), 2 computation
// failure (including any failed rolling window).

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "garch_ugh/backtest.hpp"
#include "garch_ugh/data.hpp"
#include "garch_ugh/error.hpp"
#include "garch_ugh/garch.hpp"
#include "garch_ugh/report.hpp"

namespace garch_ugh::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kComputation = 2 };

struct RunConfig {
    std::string input;
    std::string mode = "out_of_sample";  // describe | in_sample | out_of_sample | simulate
    std::vector<std::string> methods{"ugh", "garch_ugh", "garch_evt"};
    std::vector<double> tau_levels{0.99, 0.995, 0.999};
    std::vector<double> k_fractions{0.05, 0.10, 0.15, 0.20, 0.25};
    std::size_t wt = 3000;
    std::size_t we = 1000;
    std::uint64_t seed = 1;
    std::string out = "out";
    unsigned threads = 0;
    std::vector<int> lb_lags{1, 5, 10};
    // simulate mode
    std::size_t sim_n = 4000;
    double sim_df = 5.0;
};

inline void validate(const RunConfig& c) {
    static const std::vector<std::string> modes{"describe", "in_sample", "out_of_sample", "simulate"};
    if (std::find(modes.begin(), modes.end(), c.mode) == modes.end())
        throw ValidationError("unknown mode '" + c.mode + "'");
    if (c.mode != "simulate" && c.input.empty()) throw ValidationError("--input is required");
    for (double t : c.tau_levels)
        if (!(t > 0.9 && t < 1.0)) throw ValidationError("tau levels must lie in (0.9, 1)");
    for (double k : c.k_fractions)
        if (!(k > 0.0 && k < 0.5)) throw ValidationError("k fractions must lie in (0, 0.5)");
    if (c.we < garch::kMinFitWindow) throw ValidationError("--we must be >= 100");
    if (c.wt < 2) throw ValidationError("--wt must be >= 2");
    if (c.methods.empty()) throw ValidationError("--methods must not be empty");
    for (const auto& m : c.methods)
        if (!var::parse_method(m)) throw ValidationError("unknown method '" + m + "'");
    if (c.mode == "simulate" && (c.sim_n < 2 || !(c.sim_df > 2.0)))
        throw ValidationError("simulate: need --sim-n >= 2 and --sim-df > 2");
}

inline backtest::BacktestConfig to_backtest_config(const RunConfig& c) {
    backtest::BacktestConfig b;
    b.methods.clear();
    for (const auto& m : c.methods) b.methods.push_back(*var::parse_method(m));
    b.taus = c.tau_levels;
    b.k_fractions = c.k_fractions;
    b.testing_window = c.wt;
    b.estimation_window = c.we;
    b.threads = c.threads;
    return b;
}

inline std::ofstream open_output(const std::filesystem::path& p) {
    std::ofstream os(p);
    if (!os) throw ValidationError("cannot write '" + p.string() + "'");
    return os;
}

inline int cmd_describe(const RunConfig& c, std::ostream& out) {
    const auto prices = data::load_prices_file(c.input);
    const auto returns = data::neg_log_returns(prices);
    const auto stats = data::describe(returns, c.lb_lags);
    std::filesystem::create_directories(c.out);
    const auto path = std::filesystem::path(c.out) / "stats.csv";
    auto os = open_output(path);
    data::write_stats_csv(os, stats);
    out << "wrote " << path.string() << '\n';
    data::write_stats_csv(out, stats);
    return kOk;
}

inline int cmd_backtest(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const auto prices = data::load_prices_file(c.input);
    const auto returns = data::neg_log_returns(prices);
    const bool in_sample = c.mode == "in_sample";
    const auto bcfg = to_backtest_config(c);

    // Length checks happen before any fitting.
    if (in_sample && returns.size() < c.wt)
        throw ValidationError("series has " + std::to_string(returns.size()) +
                              " returns, fewer than --wt=" + std::to_string(c.wt));
    if (!in_sample && returns.size() < c.we + c.wt)
        throw ValidationError("series has " + std::to_string(returns.size()) +
                              " returns, fewer than --we + --wt = " + std::to_string(c.we + c.wt));

    const auto run = in_sample ? backtest::run_in_sample(returns.values, bcfg)
                               : backtest::run_out_of_sample(returns.values, bcfg);

    std::filesystem::create_directories(c.out);
    const auto stem = std::filesystem::path(c.out) / ("report_" + c.mode);
    {
        auto os = open_output(stem.string() + ".csv");
        report::write_reports_csv(os, run);
    }
    {
        report::RunMetadata meta{c.mode, c.wt, in_sample ? 0 : c.we, c.seed, c.input, {}};
        for (const auto& d : returns.dates) meta.dates.push_back(data::format_date(d));
        auto os = open_output(stem.string() + ".json");
        os << report::to_json(run, meta).dump() << '\n';
    }
    report::print_summary(out, run);
    out << "wrote " << stem.string() << ".csv and .json\n";

    if (!run.failures.empty()) {
        for (const auto& f : run.failures) err << "error: " << f.message << '\n';
        return kComputation;
    }
    return kOk;
}

/// Writes a synthetic price path whose negative log-returns follow an
/// AR(1)-GARCH(1,1) with standardized Student-t innovations.
inline int cmd_simulate(const RunConfig& c, std::ostream& out) {
    const garch::GarchParams params{0.05, 1e-6, 0.08, 0.90};
    const auto x = garch::simulate(params, c.sim_n, 1000, c.seed, garch::StudentInnovations(c.sim_df));
    std::filesystem::create_directories(c.out);
    const auto path = std::filesystem::path(c.out) / "simulated_prices.csv";
    auto os = open_output(path);
    os << "date,price\n";
    using namespace std::chrono;
    sys_days day = sys_days{year{2000} / January / 3};
    double price = 100.0;
    os.precision(17);
    os << data::format_date(year_month_day{day}) << ',' << price << '\n';
    for (double r : x) {
        day += days{1};
        price *= std::exp(-r);
        os << data::format_date(year_month_day{day}) << ',' << price << '\n';
    }
    out << "wrote " << path.string() << " (" << x.size() + 1 << " prices)\n";
    return kOk;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    RunConfig c;
    CLI::App app{"GARCH-UGH dynamic extreme VaR estimation and backtesting"};
    app.set_config("--config", "", "TOML/INI config file; command-line flags override it");
    app.add_option("--input", c.input, "price CSV with header date,price");
    app.add_option("--mode", c.mode, "describe | in_sample | out_of_sample | simulate")->capture_default_str();
    app.add_option("--methods", c.methods, "subset of ugh, garch_ugh, garch_evt")->delimiter(',')->capture_default_str();
    app.add_option("--tau", c.tau_levels, "VaR levels")->delimiter(',')->capture_default_str();
    app.add_option("--k-frac", c.k_fractions, "fractions of the window used as top order statistics")
        ->delimiter(',')
        ->capture_default_str();
    app.add_option("--wt", c.wt, "testing window length W_T")->capture_default_str();
    app.add_option("--we", c.we, "estimation window length W_E (out-of-sample)")->capture_default_str();
    app.add_option("--seed", c.seed, "seed (simulate mode; recorded in outputs)")->capture_default_str();
    app.add_option("--out", c.out, "output directory")->capture_default_str();
    app.add_option("--threads", c.threads, "worker threads, 0 = all cores")->capture_default_str();
    app.add_option("--lb-lags", c.lb_lags, "Ljung-Box lags for describe")->delimiter(',')->capture_default_str();
    app.add_option("--sim-n", c.sim_n, "simulate: number of returns")->capture_default_str();
    app.add_option("--sim-df", c.sim_df, "simulate: Student-t degrees of freedom")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    }

    try {
        validate(c);
        if (c.mode == "describe") return cmd_describe(c, out);
        if (c.mode == "simulate") return cmd_simulate(c, out);
        return cmd_backtest(c, out, err);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kComputation;
    }
}

}  // namespace garch_ugh::cli
