#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "garch_ugh/chi2.hpp"
#include "garch_ugh/error.hpp"
#include "garch_ugh/evt.hpp"
#include "garch_ugh/garch.hpp"
#include "garch_ugh/var_engine.hpp"

namespace garch_ugh::backtest {

struct HitSequence {
    std::vector<std::uint8_t> hits;
    std::size_t T = 0;
    std::size_t N = 0;
    std::size_t n00 = 0, n01 = 0, n10 = 0, n11 = 0;

    static HitSequence from_hits(std::vector<std::uint8_t> h) {
        HitSequence s;
        s.hits = std::move(h);
        s.T = s.hits.size();
        for (std::size_t t = 0; t < s.T; ++t) {
            if (s.hits[t] > 1) throw ValidationError("hit values must be 0 or 1");
            s.N += s.hits[t];
            if (t + 1 < s.T) {
                const int from = s.hits[t], to = s.hits[t + 1];
                (from ? (to ? s.n11 : s.n10) : (to ? s.n01 : s.n00))++;
            }
        }
        return s;
    }
};

/// I_t = 1{x_t > VaR_t}; strict inequality.
inline HitSequence make_hits(std::span<const double> realized, std::span<const double> var) {
    if (realized.size() != var.size()) throw ValidationError("make_hits: size mismatch");
    std::vector<std::uint8_t> h(realized.size());
    for (std::size_t t = 0; t < h.size(); ++t) h[t] = realized[t] > var[t] ? 1 : 0;
    return HitSequence::from_hits(std::move(h));
}

namespace detail {
// count * log(prob) with 0 log 0 = 0.
inline double xlogp(double count, double prob) { return count == 0.0 ? 0.0 : count * std::log(prob); }

inline double bernoulli_loglik(double n1, double n0, double p) { return xlogp(n1, p) + xlogp(n0, 1.0 - p); }
}  // namespace detail

struct UnconditionalTest {
    double lr = 0.0;
    double p_value = 1.0;
};

struct CoverageTest {
    double lr_uc = 0.0, lr_ind = 0.0, lr_cc = 0.0;
    double p_uc = 1.0, p_ind = 1.0, p_cc = 1.0;
};

/// Kupiec proportion-of-failures test against violation rate p.
inline UnconditionalTest kupiec(const HitSequence& h, double p) {
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("kupiec: p must lie in (0,1)");
    if (h.T == 0) throw ValidationError("kupiec: empty hit sequence");
    const double T = static_cast<double>(h.T), N = static_cast<double>(h.N);
    const double lr = -2.0 * detail::bernoulli_loglik(N, T - N, p) +
                      2.0 * detail::bernoulli_loglik(N, T - N, N / T);
    const double lr_clamped = std::max(lr, 0.0);
    return {lr_clamped, chi2_sf(lr_clamped, 1)};
}

/// Christoffersen conditional coverage with LR_ind = LR_cc - LR_uc.
inline CoverageTest christoffersen(const HitSequence& h, double p) {
    if (h.T < 2) throw ValidationError("christoffersen: need T >= 2");
    const auto uc = kupiec(h, p);
    const double T = static_cast<double>(h.T), N = static_cast<double>(h.N);
    const double n00 = static_cast<double>(h.n00), n01 = static_cast<double>(h.n01);
    const double n10 = static_cast<double>(h.n10), n11 = static_cast<double>(h.n11);

    double markov = 0.0;
    if (n00 + n01 > 0) markov += detail::bernoulli_loglik(n01, n00, n01 / (n00 + n01));
    if (n10 + n11 > 0) markov += detail::bernoulli_loglik(n11, n10, n11 / (n10 + n11));

    CoverageTest c;
    c.lr_uc = uc.lr;
    c.p_uc = uc.p_value;
    c.lr_cc = std::max(-2.0 * detail::bernoulli_loglik(N, T - N, p) + 2.0 * markov, 0.0);
    c.lr_ind = c.lr_cc - c.lr_uc;
    c.p_cc = chi2_sf(c.lr_cc, 2);
    c.p_ind = chi2_sf(std::max(c.lr_ind, 0.0), 1);
    return c;
}

enum class RhoVariant { NotApplicable, Estimated, MinusOne };

inline std::string_view to_string(RhoVariant v) {
    switch (v) {
        case RhoVariant::NotApplicable: return "n/a";
        case RhoVariant::Estimated: return "estimated";
        case RhoVariant::MinusOne: return "minus_one";
    }
    return "?";
}

struct BacktestReport {
    var::Method method = var::Method::GarchUgh;
    double tau = 0.0;
    double k_fraction = 0.0;
    double expected = 0.0;
    std::size_t observed = 0;
    std::size_t missing = 0;  // forecasts that failed and were left out of the hits
    CoverageTest test;
    std::vector<var::VaRForecast> forecasts;
    std::vector<double> realized;
    HitSequence hits;
    RhoVariant rho_variant = RhoVariant::NotApplicable;
};

/// Keeps whichever report lands closer to the expected violation count; ties
/// keep the estimated-rho version.
inline BacktestReport select_rho_variant(BacktestReport estimated, BacktestReport minus_one,
                                         double expected) {
    if (estimated.method != minus_one.method || estimated.tau != minus_one.tau ||
        estimated.k_fraction != minus_one.k_fraction)
        throw ValidationError("select_rho_variant: reports do not share method/tau/k");
    const double d_est = std::abs(static_cast<double>(estimated.observed) - expected);
    const double d_m1 = std::abs(static_cast<double>(minus_one.observed) - expected);
    if (d_m1 < d_est) {
        minus_one.rho_variant = RhoVariant::MinusOne;
        return minus_one;
    }
    estimated.rho_variant = RhoVariant::Estimated;
    return estimated;
}

struct BacktestConfig {
    std::vector<var::Method> methods{var::Method::Ugh, var::Method::GarchUgh, var::Method::GarchEvt};
    std::vector<double> taus{0.99, 0.995, 0.999};
    std::vector<double> k_fractions{0.05, 0.10, 0.15, 0.20, 0.25};
    std::size_t testing_window = 3000;     // W_T
    std::size_t estimation_window = 1000;  // W_E
    unsigned threads = 0;                  // 0 = hardware concurrency
};

struct WindowFailure {
    std::size_t t_index = 0;
    std::string message;
};

struct BacktestRun {
    std::vector<BacktestReport> reports;
    std::vector<WindowFailure> failures;
    bool in_sample = false;
    std::size_t series_length = 0;
    std::size_t first_index = 0;  // series index of the first tested observation
};

namespace detail {

inline bool uses_filter(const std::vector<var::Method>& methods) {
    return std::any_of(methods.begin(), methods.end(),
                       [](var::Method m) { return m != var::Method::Ugh; });
}

inline void validate(const BacktestConfig& c) {
    if (c.methods.empty() || c.taus.empty() || c.k_fractions.empty())
        throw ValidationError("backtest: methods, tau levels and k fractions must be non-empty");
    for (double t : c.taus)
        if (!(t > 0.0 && t < 1.0)) throw ValidationError("backtest: tau must lie in (0,1)");
    for (double k : c.k_fractions)
        if (!(k > 0.0 && k < 1.0)) throw ValidationError("backtest: k fraction must lie in (0,1)");
    if (c.testing_window < 2) throw ValidationError("backtest: testing window must be >= 2");
}

inline void finish_report(BacktestReport& r) {
    std::vector<double> realized, var;
    for (std::size_t i = 0; i < r.forecasts.size(); ++i) {
        if (!std::isfinite(r.forecasts[i].value)) {
            ++r.missing;
            continue;
        }
        realized.push_back(r.realized[i]);
        var.push_back(r.forecasts[i].value);
    }
    r.hits = make_hits(realized, var);
    r.observed = r.hits.N;
    r.expected = static_cast<double>(r.hits.T) * (1.0 - r.tau);
    r.test = r.hits.T >= 2 ? christoffersen(r.hits, 1.0 - r.tau) : CoverageTest{};
}

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    unsigned nthreads = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    nthreads = static_cast<unsigned>(std::min<std::size_t>(nthreads, count));
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (unsigned w = 0; w < nthreads; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
    for (auto& th : pool) th.join();
}

// Slot layout for per-window forecasts: [method][tau][k] flattened.
struct Grid {
    const BacktestConfig& cfg;
    std::size_t index(std::size_t m, std::size_t t, std::size_t k) const {
        return (m * cfg.taus.size() + t) * cfg.k_fractions.size() + k;
    }
    std::size_t size() const { return cfg.methods.size() * cfg.taus.size() * cfg.k_fractions.size(); }
};

}  // namespace detail

/// One filter fit on the last W_T observations; each in-window observation is
/// compared with mu_t + sigma_t q(Z) from that fit (the unfiltered method uses
/// one constant quantile). GARCH-UGH reports keep the rho = -1 variant when it
/// lands closer to the expected count.
inline BacktestRun run_in_sample(std::span<const double> series, const BacktestConfig& cfg) {
    detail::validate(cfg);
    const std::size_t wt = cfg.testing_window;
    if (series.size() < wt)
        throw ValidationError("run_in_sample: series shorter than the testing window");
    const std::size_t start = series.size() - wt;
    const auto window = series.subspan(start, wt);

    BacktestRun run;
    run.in_sample = true;
    run.series_length = series.size();
    run.first_index = start;

    std::optional<garch::GarchFit> fit;
    std::optional<evt::OrderedSample> resid;
    std::optional<evt::KRho> resid_krho;
    if (detail::uses_filter(cfg.methods)) {
        fit = garch::fit_qmle(window);
        resid.emplace(fit->residuals);
    }
    std::optional<evt::OrderedSample> raw;
    std::optional<evt::KRho> raw_krho;

    auto make_report = [&](var::Method m, double tau, double kf, const std::vector<double>& values,
                           const var::VaRForecast& proto) {
        BacktestReport r;
        r.method = m;
        r.tau = tau;
        r.k_fraction = kf;
        r.rho_variant = m == var::Method::GarchEvt ? RhoVariant::NotApplicable : RhoVariant::Estimated;
        r.realized.assign(window.begin(), window.end());
        r.forecasts.resize(wt, proto);
        for (std::size_t i = 0; i < wt; ++i) {
            r.forecasts[i].t_index = start + i;
            r.forecasts[i].value = values[i];
            if (fit && m != var::Method::Ugh) {
                r.forecasts[i].mu = fit->mu[i];
                r.forecasts[i].sigma = fit->sigma[i];
            }
        }
        detail::finish_report(r);
        return r;
    };

    auto filtered_values = [&](double zq) {
        std::vector<double> v(wt);
        for (std::size_t i = 0; i < wt; ++i) v[i] = fit->mu[i] + fit->sigma[i] * zq;
        return v;
    };

    for (var::Method m : cfg.methods) {
        for (double tau : cfg.taus) {
            const double p = 1.0 - tau;
            for (double kf : cfg.k_fractions) {
                var::VaRForecast proto;
                proto.method = m;
                proto.tau = tau;
                proto.k_fraction = kf;
                switch (m) {
                    case var::Method::Ugh: {
                        if (!raw) {
                            raw.emplace(window);
                            raw_krho = evt::select_k_rho(*raw);
                        }
                        const auto q = var::ugh_sample_quantile(*raw, *raw_krho, kf, p);
                        proto.k = q.tail.k;
                        proto.rho_used = q.tail.rho_hat;
                        proto.rho_fallback = q.tail.rho_fallback_used;
                        proto.z_quantile = q.value;
                        run.reports.push_back(make_report(m, tau, kf, std::vector<double>(wt, q.value), proto));
                        break;
                    }
                    case var::Method::GarchUgh: {
                        if (!resid_krho) resid_krho = evt::select_k_rho(*resid);
                        const auto q_est = var::ugh_sample_quantile(*resid, *resid_krho, kf, p);
                        const auto q_m1 = var::ugh_sample_quantile(*resid, *resid_krho, kf, p, -1.0);
                        proto.k = q_est.tail.k;
                        auto est_proto = proto;
                        est_proto.rho_used = q_est.tail.rho_hat;
                        est_proto.rho_fallback = q_est.tail.rho_fallback_used;
                        est_proto.z_quantile = q_est.value;
                        auto m1_proto = proto;
                        m1_proto.rho_used = -1.0;
                        m1_proto.z_quantile = q_m1.value;
                        auto est = make_report(m, tau, kf, filtered_values(q_est.value), est_proto);
                        auto m1 = make_report(m, tau, kf, filtered_values(q_m1.value), m1_proto);
                        const double expected = est.expected;
                        run.reports.push_back(select_rho_variant(std::move(est), std::move(m1), expected));
                        break;
                    }
                    case var::Method::GarchEvt: {
                        const std::size_t k = evt::k_from_fraction(*resid, kf);
                        const auto gpd = evt::gpd_fit(*resid, k);
                        const double zq = evt::gpd_quantile(gpd, p, resid->n());
                        proto.k = k;
                        proto.rho_used = std::nan("");
                        proto.z_quantile = zq;
                        run.reports.push_back(make_report(m, tau, kf, filtered_values(zq), proto));
                        break;
                    }
                }
            }
        }
    }
    return run;
}

/// Rolling one-step-ahead forecasts over the last W_T observations, each from
/// a fresh fit on the preceding W_E observations. Windows may be evaluated in
/// parallel; results are stored by position, so output does not depend on the
/// thread count. A failed window leaves NaN forecasts and a WindowFailure.
inline BacktestRun run_out_of_sample(std::span<const double> series, const BacktestConfig& cfg) {
    detail::validate(cfg);
    const std::size_t wt = cfg.testing_window, we = cfg.estimation_window;
    if (we < garch::kMinFitWindow)
        throw ValidationError("run_out_of_sample: estimation window must be >= " +
                              std::to_string(garch::kMinFitWindow));
    if (series.size() < we + wt)
        throw ValidationError("run_out_of_sample: series length " + std::to_string(series.size()) +
                              " < W_E + W_T = " + std::to_string(we + wt));

    const std::size_t start = series.size() - wt;
    const detail::Grid grid{cfg};
    const bool filter = detail::uses_filter(cfg.methods);

    // forecasts[slot][i]
    std::vector<std::vector<var::VaRForecast>> forecasts(grid.size(), std::vector<var::VaRForecast>(wt));
    std::vector<std::optional<std::string>> errors(wt);

    detail::parallel_for(wt, cfg.threads, [&](std::size_t i) {
        const std::size_t target = start + i;
        const auto window = series.subspan(target - we, we);
        try {
            std::optional<garch::GarchFit> fit;
            std::optional<evt::OrderedSample> resid;
            std::optional<evt::KRho> resid_krho;
            if (filter) {
                fit = garch::fit_qmle(window);
                resid.emplace(fit->residuals);
            }
            std::optional<evt::OrderedSample> raw;
            std::optional<evt::KRho> raw_krho;

            for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
                const var::Method m = cfg.methods[mi];
                for (std::size_t ki = 0; ki < cfg.k_fractions.size(); ++ki) {
                    const double kf = cfg.k_fractions[ki];
                    std::optional<evt::GpdFit> gpd;
                    for (std::size_t ti = 0; ti < cfg.taus.size(); ++ti) {
                        const double tau = cfg.taus[ti];
                        const double p = 1.0 - tau;
                        var::VaRForecast f;
                        switch (m) {
                            case var::Method::Ugh: {
                                if (!raw) {
                                    raw.emplace(window);
                                    raw_krho = evt::select_k_rho(*raw);
                                }
                                const auto q = var::ugh_sample_quantile(*raw, *raw_krho, kf, p);
                                f.value = f.z_quantile = q.value;
                                f.k = q.tail.k;
                                f.rho_used = q.tail.rho_hat;
                                f.rho_fallback = q.tail.rho_fallback_used;
                                break;
                            }
                            case var::Method::GarchUgh: {
                                if (!resid_krho) resid_krho = evt::select_k_rho(*resid);
                                const auto q = var::ugh_sample_quantile(*resid, *resid_krho, kf, p);
                                f = var::compose(*fit, q.value);
                                f.k = q.tail.k;
                                f.rho_used = q.tail.rho_hat;
                                f.rho_fallback = q.tail.rho_fallback_used;
                                break;
                            }
                            case var::Method::GarchEvt: {
                                if (!gpd) gpd = evt::gpd_fit(*resid, evt::k_from_fraction(*resid, kf));
                                f = var::compose(*fit, evt::gpd_quantile(*gpd, p, resid->n()));
                                f.k = gpd->k;
                                f.rho_used = std::nan("");
                                break;
                            }
                        }
                        if (!std::isfinite(f.value))
                            throw ComputationError("non-finite forecast for " +
                                                   std::string(var::to_string(m)));
                        f.method = m;
                        f.tau = tau;
                        f.k_fraction = kf;
                        f.t_index = target;
                        forecasts[grid.index(mi, ti, ki)][i] = f;
                    }
                }
            }
        } catch (const std::exception& e) {
            errors[i] = "window ending at index " + std::to_string(target - 1) + ": " + e.what();
            for (auto& slot : forecasts) {
                slot[i] = var::VaRForecast{};
                slot[i].value = std::numeric_limits<double>::quiet_NaN();
                slot[i].t_index = target;
            }
        }
    });

    BacktestRun run;
    run.in_sample = false;
    run.series_length = series.size();
    run.first_index = start;
    for (std::size_t i = 0; i < wt; ++i)
        if (errors[i]) run.failures.push_back({start + i, *errors[i]});

    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi)
        for (std::size_t ti = 0; ti < cfg.taus.size(); ++ti)
            for (std::size_t ki = 0; ki < cfg.k_fractions.size(); ++ki) {
                BacktestReport r;
                r.method = cfg.methods[mi];
                r.tau = cfg.taus[ti];
                r.k_fraction = cfg.k_fractions[ki];
                r.rho_variant = r.method == var::Method::GarchEvt ? RhoVariant::NotApplicable
                                                                  : RhoVariant::Estimated;
                r.forecasts = std::move(forecasts[grid.index(mi, ti, ki)]);
                for (auto& f : r.forecasts) {
                    f.method = r.method;
                    f.tau = r.tau;
                    f.k_fraction = r.k_fraction;
                }
                r.realized.assign(series.begin() + static_cast<std::ptrdiff_t>(start), series.end());
                detail::finish_report(r);
                run.reports.push_back(std::move(r));
            }
    return run;
}

}  // namespace garch_ugh::backtest
