#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "garch_ugh/chi2.hpp"
#include "garch_ugh/error.hpp"

namespace garch_ugh::data {

using Date = std::chrono::year_month_day;

struct PriceSeries {
    std::vector<Date> dates;
    std::vector<double> prices;

    std::size_t size() const noexcept { return prices.size(); }
};

/// Negative log-returns, raw scale. dates[t] is the date of the later price.
struct ReturnSeries {
    std::vector<Date> dates;
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
};

struct LjungBoxEntry {
    int lag = 0;
    double stat = 0.0;
    double p = 1.0;
};

struct DescriptiveStats {
    std::size_t n = 0;
    double mean = 0.0;
    double median = 0.0;
    double max = 0.0;
    double min = 0.0;
    double sd = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0;  // raw, equals 3 for a Gaussian
    double jarque_bera_stat = 0.0;
    double jarque_bera_p = 1.0;
    std::vector<LjungBoxEntry> ljung_box;          // returns
    std::vector<LjungBoxEntry> ljung_box_squared;  // squared returns
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

template <class T>
bool parse_number(std::string_view s, T& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

// YYYY-MM-DD
inline bool parse_iso_date(std::string_view s, Date& out) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    int y = 0;
    unsigned m = 0, d = 0;
    if (!parse_number(s.substr(0, 4), y) || !parse_number(s.substr(5, 2), m) ||
        !parse_number(s.substr(8, 2), d))
        return false;
    out = Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    return out.ok();
}

}  // namespace detail

inline std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

/// Reads a `date,price` CSV (header required). Errors carry the 1-based line
/// number of the offending row.
inline PriceSeries load_prices(std::istream& in) {
    PriceSeries out;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;

    while (std::getline(in, line)) {
        ++lineno;
        std::string_view row = detail::trim(line);
        if (lineno == 1 && row.starts_with("\xEF\xBB\xBF")) row.remove_prefix(3);
        if (row.empty()) continue;

        const auto comma = row.find(',');
        if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos)
            throw ParseError(lineno, "expected exactly two fields 'date,price'");
        const auto date_field = detail::trim(row.substr(0, comma));
        const auto price_field = detail::trim(row.substr(comma + 1));

        if (!header_seen) {
            if (date_field != "date" || price_field != "price")
                throw ParseError(lineno, "missing header 'date,price'");
            header_seen = true;
            continue;
        }

        Date date;
        if (!detail::parse_iso_date(date_field, date))
            throw ParseError(lineno, "invalid date '" + std::string(date_field) + "'");
        double price = 0.0;
        if (!detail::parse_number(price_field, price) || !std::isfinite(price))
            throw ParseError(lineno, "invalid price '" + std::string(price_field) + "'");
        if (price <= 0.0) throw ParseError(lineno, "non-positive price");
        if (!out.dates.empty() && !(out.dates.back() < date))
            throw ParseError(lineno, out.dates.back() == date ? "duplicate date" : "dates not increasing");

        out.dates.push_back(date);
        out.prices.push_back(price);
    }
    if (!header_seen) throw ValidationError("empty price file");
    if (out.size() < 2) throw ValidationError("price series needs at least 2 rows");
    return out;
}

inline PriceSeries load_prices_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    try {
        return load_prices(in);
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

inline ReturnSeries neg_log_returns(const PriceSeries& p) {
    if (p.size() < 2 || p.dates.size() != p.prices.size())
        throw ValidationError("neg_log_returns: need at least 2 dated prices");
    ReturnSeries r;
    r.dates.assign(p.dates.begin() + 1, p.dates.end());
    r.values.resize(p.size() - 1);
    for (std::size_t t = 0; t + 1 < p.size(); ++t)
        r.values[t] = -std::log(p.prices[t + 1] / p.prices[t]);
    return r;
}

/// Ljung-Box Q(m) = n(n+2) sum_{j<=m} r_j^2 / (n-j). A constant series has no
/// defined autocorrelation and yields Q = 0.
inline double ljung_box_statistic(std::span<const double> x, int lag) {
    const std::size_t n = x.size();
    if (lag < 1 || static_cast<std::size_t>(lag) + 1 >= n)
        throw ValidationError("ljung_box: lag must satisfy 1 <= lag < n - 1");
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double denom = 0.0;
    for (double v : x) denom += (v - mean) * (v - mean);
    if (denom == 0.0) return 0.0;

    double q = 0.0;
    for (int j = 1; j <= lag; ++j) {
        double num = 0.0;
        for (std::size_t t = 0; t + j < n; ++t) num += (x[t] - mean) * (x[t + j] - mean);
        const double r = num / denom;
        q += r * r / static_cast<double>(n - j);
    }
    return static_cast<double>(n) * static_cast<double>(n + 2) * q;
}

inline DescriptiveStats describe(std::span<const double> x, std::span<const int> lb_lags) {
    const std::size_t n = x.size();
    int max_lag = 0;
    for (int lag : lb_lags) {
        if (lag < 1) throw ValidationError("describe: Ljung-Box lags must be >= 1");
        max_lag = std::max(max_lag, lag);
    }
    if (n < 3 || n <= static_cast<std::size_t>(max_lag) + 1)
        throw ValidationError("describe: series too short for requested lags");

    DescriptiveStats s;
    s.n = n;
    const double nd = static_cast<double>(n);
    s.mean = std::accumulate(x.begin(), x.end(), 0.0) / nd;

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - s.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    if (m2 == 0.0) throw ComputationError("describe: zero-variance series");
    s.sd = std::sqrt(m2 / (nd - 1.0));
    m2 /= nd;
    m3 /= nd;
    m4 /= nd;
    s.skewness = m3 / std::pow(m2, 1.5);
    s.kurtosis = m4 / (m2 * m2);
    s.jarque_bera_stat =
        nd * (s.skewness * s.skewness / 6.0 + (s.kurtosis - 3.0) * (s.kurtosis - 3.0) / 24.0);
    s.jarque_bera_p = backtest::chi2_sf(s.jarque_bera_stat, 2);

    auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    s.min = *mn;
    s.max = *mx;

    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    s.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

    std::vector<double> squared(n);
    std::transform(x.begin(), x.end(), squared.begin(), [](double v) { return v * v; });
    for (int lag : lb_lags) {
        const double q = ljung_box_statistic(x, lag);
        const double q2 = ljung_box_statistic(squared, lag);
        s.ljung_box.push_back({lag, q, backtest::chi2_sf(q, lag)});
        s.ljung_box_squared.push_back({lag, q2, backtest::chi2_sf(q2, lag)});
    }
    return s;
}

inline DescriptiveStats describe(const ReturnSeries& r, std::span<const int> lb_lags) {
    return describe(std::span<const double>(r.values), lb_lags);
}

/// key,value rows.
inline void write_stats_csv(std::ostream& os, const DescriptiveStats& s) {
    const auto old_precision = os.precision(12);
    os << "key,value\n";
    os << "n," << s.n << '\n';
    os << "mean," << s.mean << '\n';
    os << "median," << s.median << '\n';
    os << "max," << s.max << '\n';
    os << "min," << s.min << '\n';
    os << "sd," << s.sd << '\n';
    os << "skewness," << s.skewness << '\n';
    os << "kurtosis," << s.kurtosis << '\n';
    os << "jarque_bera_stat," << s.jarque_bera_stat << '\n';
    os << "jarque_bera_p," << s.jarque_bera_p << '\n';
    for (const auto& e : s.ljung_box)
        os << "Q(" << e.lag << ")," << e.stat << "\nQ(" << e.lag << ")_p," << e.p << '\n';
    for (const auto& e : s.ljung_box_squared)
        os << "Q2(" << e.lag << ")," << e.stat << "\nQ2(" << e.lag << ")_p," << e.p << '\n';
    os.precision(old_precision);
}

}  // namespace garch_ugh::data
