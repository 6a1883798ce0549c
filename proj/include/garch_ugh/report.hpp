#pragma once

// Serialization of backtest runs: a flat CSV (one row per method x tau x k),
// a JSON document with the forecast paths for plotting, and a plain-text
// summary table.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "garch_ugh/backtest.hpp"
#include "garch_ugh/error.hpp"

namespace garch_ugh::report {

/// Shortest decimal text that parses back to the same double.
inline std::string fmt_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

inline const char* kCsvHeader =
    "method,tau,k_fraction,k,expected,observed,missing,lr_uc,p_uc,lr_ind,p_ind,lr_cc,p_cc,rho_variant";

inline void write_reports_csv(std::ostream& os, const backtest::BacktestRun& run) {
    os << kCsvHeader << '\n';
    for (const auto& r : run.reports) {
        const std::size_t k = r.forecasts.empty() ? 0 : r.forecasts.front().k;
        os << var::to_string(r.method) << ',' << fmt_double(r.tau) << ',' << fmt_double(r.k_fraction)
           << ',' << k << ',' << fmt_double(r.expected) << ',' << r.observed << ',' << r.missing << ','
           << fmt_double(r.test.lr_uc) << ',' << fmt_double(r.test.p_uc) << ','
           << fmt_double(r.test.lr_ind) << ',' << fmt_double(r.test.p_ind) << ','
           << fmt_double(r.test.lr_cc) << ',' << fmt_double(r.test.p_cc) << ','
           << backtest::to_string(r.rho_variant) << '\n';
    }
}

struct CsvRow {
    var::Method method = var::Method::GarchUgh;
    double tau = 0.0, k_fraction = 0.0;
    std::size_t k = 0;
    double expected = 0.0;
    std::size_t observed = 0, missing = 0;
    backtest::CoverageTest test;
    std::string rho_variant;
};

inline std::vector<CsvRow> read_reports_csv(std::istream& in) {
    std::vector<CsvRow> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1) {
            if (line != kCsvHeader) throw ParseError(lineno, "unexpected report header");
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        if (f.size() != 14) throw ParseError(lineno, "expected 14 fields");
        auto num = [&](const std::string& s) {
            double v = 0.0;
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc{} || p != s.data() + s.size()) throw ParseError(lineno, "bad number '" + s + "'");
            return v;
        };
        CsvRow r;
        const auto m = var::parse_method(f[0]);
        if (!m) throw ParseError(lineno, "unknown method '" + f[0] + "'");
        r.method = *m;
        r.tau = num(f[1]);
        r.k_fraction = num(f[2]);
        r.k = static_cast<std::size_t>(num(f[3]));
        r.expected = num(f[4]);
        r.observed = static_cast<std::size_t>(num(f[5]));
        r.missing = static_cast<std::size_t>(num(f[6]));
        r.test = {num(f[7]), num(f[9]), num(f[11]), num(f[8]), num(f[10]), num(f[12])};
        r.rho_variant = f[13];
        rows.push_back(std::move(r));
    }
    return rows;
}

struct RunMetadata {
    std::string mode;
    std::size_t testing_window = 0;
    std::size_t estimation_window = 0;  // 0 for in-sample
    std::uint64_t seed = 0;
    std::string input;
    std::vector<std::string> dates;  // one per series observation, optional
};

inline nlohmann::json to_json(const backtest::BacktestRun& run, const RunMetadata& meta) {
    using nlohmann::json;
    json j;
    json m;
    m["mode"] = meta.mode;
    m["input"] = meta.input;
    m["seed"] = meta.seed;
    m["series_length"] = run.series_length;
    m["first_index"] = run.first_index;
    m["testing_window"] = meta.testing_window;
    if (run.in_sample) {
        m["garch_fit"] = "once_on_testing_window";
    } else {
        m["estimation_window"] = meta.estimation_window;
        m["garch_fit"] = "per_window";
    }
    m["k_basis"] = "fraction_of_window_size_capped_at_m_minus_1";
    json failures = json::array();
    for (const auto& f : run.failures) failures.push_back({{"t_index", f.t_index}, {"message", f.message}});
    m["failures"] = failures;
    if (!meta.dates.empty()) {
        const auto first = run.first_index;
        const auto last = std::min(meta.dates.size(), run.series_length);
        m["dates"] = std::vector<std::string>(meta.dates.begin() + static_cast<std::ptrdiff_t>(first),
                                              meta.dates.begin() + static_cast<std::ptrdiff_t>(last));
    }
    if (!run.reports.empty()) m["realized"] = run.reports.front().realized;
    j["metadata"] = m;

    auto num_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json reports = json::array();
    for (const auto& r : run.reports) {
        json jr;
        jr["method"] = var::to_string(r.method);
        jr["tau"] = r.tau;
        jr["k_fraction"] = r.k_fraction;
        jr["expected"] = r.expected;
        jr["observed"] = r.observed;
        jr["missing"] = r.missing;
        jr["rho_variant"] = backtest::to_string(r.rho_variant);
        jr["test"] = {{"lr_uc", r.test.lr_uc}, {"p_uc", r.test.p_uc}, {"lr_ind", r.test.lr_ind},
                      {"p_ind", r.test.p_ind}, {"lr_cc", r.test.lr_cc}, {"p_cc", r.test.p_cc}};
        json value = json::array(), mu = json::array(), sigma = json::array(), zq = json::array(),
             rho = json::array(), fallback = json::array(), k = json::array();
        json violations = json::array();
        for (std::size_t i = 0; i < r.forecasts.size(); ++i) {
            const auto& f = r.forecasts[i];
            value.push_back(num_or_null(f.value));
            mu.push_back(num_or_null(f.mu));
            sigma.push_back(num_or_null(f.sigma));
            zq.push_back(num_or_null(f.z_quantile));
            rho.push_back(num_or_null(f.rho_used));
            fallback.push_back(f.rho_fallback);
            k.push_back(f.k);
            if (std::isfinite(f.value) && r.realized[i] > f.value) violations.push_back(f.t_index);
        }
        jr["forecast"] = {{"t_index_start", r.forecasts.empty() ? 0 : r.forecasts.front().t_index},
                          {"var", value},
                          {"mu", mu},
                          {"sigma", sigma},
                          {"z_quantile", zq},
                          {"k", k},
                          {"rho", rho},
                          {"rho_fallback", fallback}};
        jr["violations"] = violations;
        reports.push_back(std::move(jr));
    }
    j["reports"] = reports;
    return j;
}

/// Table grouped by tau (highest first), one column per k fraction, a row of
/// violation counts per method followed by (p_uc, p_cc).
inline void print_summary(std::ostream& os, const backtest::BacktestRun& run) {
    std::vector<double> taus, kfs;
    std::vector<var::Method> methods;
    for (const auto& r : run.reports) {
        if (std::find(taus.begin(), taus.end(), r.tau) == taus.end()) taus.push_back(r.tau);
        if (std::find(kfs.begin(), kfs.end(), r.k_fraction) == kfs.end()) kfs.push_back(r.k_fraction);
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    }
    std::sort(taus.rbegin(), taus.rend());
    auto find = [&](var::Method m, double tau, double kf) -> const backtest::BacktestReport* {
        for (const auto& r : run.reports)
            if (r.method == m && r.tau == tau && r.k_fraction == kf) return &r;
        return nullptr;
    };
    char buf[64];
    auto cell = [&](const std::string& s) {
        std::snprintf(buf, sizeof buf, "%-17s", s.c_str());
        os << buf;
    };

    os << (run.in_sample ? "In-sample" : "Out-of-sample") << " backtest, testing window "
       << (run.reports.empty() ? 0 : run.reports.front().forecasts.size()) << '\n';
    cell("% of top obs.");
    for (double kf : kfs) {
        std::snprintf(buf, sizeof buf, "%g%%", 100.0 * kf);
        cell(buf);
    }
    os << '\n';
    for (double tau : taus) {
        std::snprintf(buf, sizeof buf, "%g quantile", tau);
        os << buf << '\n';
        cell("  Expected");
        for (double kf : kfs) {
            const auto* r = find(methods.front(), tau, kf);
            std::snprintf(buf, sizeof buf, "%g", r ? r->expected : 0.0);
            cell(buf);
        }
        os << '\n';
        for (var::Method m : methods) {
            cell("  " + std::string(var::display_name(m)));
            for (double kf : kfs) {
                const auto* r = find(m, tau, kf);
                cell(r ? std::to_string(r->observed) + (r->rho_variant == backtest::RhoVariant::MinusOne ? "*" : "")
                       : "-");
            }
            os << '\n';
            cell("");
            for (double kf : kfs) {
                const auto* r = find(m, tau, kf);
                if (r) {
                    std::snprintf(buf, sizeof buf, "(%.3f, %.3f)", r->test.p_uc, r->test.p_cc);
                    cell(buf);
                } else {
                    cell("");
                }
            }
            os << '\n';
        }
    }
    if (run.in_sample) os << "* rho fixed at -1 (closer to the expected count)\n";
    if (!run.failures.empty()) os << run.failures.size() << " window(s) failed\n";
}

}  // namespace garch_ugh::report
