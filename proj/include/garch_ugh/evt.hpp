#pragma once

// Tail estimation on the upper order statistics of a sample:
//  - Hill and log-moment statistics M_k^(a) = (1/k) sum_i (log Z_{n-i+1,n} - log Z_{n-k,n})^a
//  - second-order parameter estimate rho_k^(2) and the k_rho selection rule
//  - bias-corrected Hill and extrapolated quantile
//  - Weissman quantile
//  - GPD peaks-over-threshold fit and quantile (benchmark)
//
// Everything that takes logs works on the positive part of the sample, so k is
// always checked against m (number of strictly positive values), not n.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "garch_ugh/error.hpp"
#include "garch_ugh/optimizer.hpp"

namespace garch_ugh::evt {

class OrderedSample {
public:
    explicit OrderedSample(std::span<const double> values)
        : sorted_(values.begin(), values.end()) {
        for (double v : sorted_)
            if (!std::isfinite(v)) throw ValidationError("OrderedSample: non-finite value");
        std::sort(sorted_.begin(), sorted_.end());
        const auto first_pos = std::upper_bound(sorted_.begin(), sorted_.end(), 0.0);
        m_ = static_cast<std::size_t>(sorted_.end() - first_pos);
        logs_.assign(sorted_.size(), 0.0);
        for (std::size_t j = sorted_.size() - m_; j < sorted_.size(); ++j) logs_[j] = std::log(sorted_[j]);
    }

    std::size_t n() const noexcept { return sorted_.size(); }
    std::size_t m() const noexcept { return m_; }
    std::span<const double> sorted() const noexcept { return sorted_; }

    /// Z_{n-k,n}, the (k+1)-th largest value.
    double threshold(std::size_t k) const {
        check_k_any(k);
        return sorted_[n() - k - 1];
    }
    /// Z_{n-i+1,n}, the i-th largest value (i = 1 is the maximum).
    double top(std::size_t i) const { return sorted_[n() - i]; }

    /// log Z_{n-i+1,n}; valid for i <= m.
    double log_top(std::size_t i) const { return logs_[n() - i]; }

    /// Requires 0 < k < m so that the threshold is positive.
    void check_k_positive(std::size_t k) const {
        if (k == 0 || k >= m_)
            throw ValidationError("k=" + std::to_string(k) + " must satisfy 0 < k < m=" +
                                  std::to_string(m_) + " (threshold must be positive)");
    }
    void check_k_any(std::size_t k) const {
        if (k == 0 || k >= n())
            throw ValidationError("k=" + std::to_string(k) + " must satisfy 0 < k < n=" +
                                  std::to_string(n()));
    }

private:
    std::vector<double> sorted_;
    std::vector<double> logs_;
    std::size_t m_ = 0;
};

/// Number of top order statistics for a fraction of the sample size n, capped
/// at m - 1 so the threshold stays positive.
inline std::size_t k_from_fraction(const OrderedSample& s, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ValidationError("k fraction must lie in (0,1)");
    if (s.m() < 2) throw ComputationError("fewer than two positive values in sample");
    const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(s.n())));
    return std::clamp<std::size_t>(k, 1, s.m() - 1);
}

struct LogMoments {
    double m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
};

inline LogMoments log_moments_all(const OrderedSample& s, std::size_t k) {
    s.check_k_positive(k);
    const double th = s.log_top(k + 1);
    LogMoments lm;
    for (std::size_t i = 1; i <= k; ++i) {
        const double d = s.log_top(i) - th;
        const double d2 = d * d;
        lm.m1 += d;
        lm.m2 += d2;
        lm.m3 += d2 * d;
        lm.m4 += d2 * d2;
    }
    const double kd = static_cast<double>(k);
    lm.m1 /= kd;
    lm.m2 /= kd;
    lm.m3 /= kd;
    lm.m4 /= kd;
    return lm;
}

inline double log_moments(const OrderedSample& s, std::size_t k, int alpha) {
    const LogMoments lm = log_moments_all(s, k);
    switch (alpha) {
        case 1: return lm.m1;
        case 2: return lm.m2;
        case 3: return lm.m3;
        case 4: return lm.m4;
        default: throw ValidationError("log_moments: alpha must be 1, 2, 3 or 4");
    }
}

inline double hill(const OrderedSample& s, std::size_t k) { return log_moments_all(s, k).m1; }

/// S_k^(2) = (3/4) [M4 - 24 M1^4][M2 - 2 M1^2] / [M3 - 6 M1^3]^2; empty when
/// the denominator vanishes.
inline std::optional<double> rho_statistic(const LogMoments& lm) {
    const double g = lm.m1;
    const double den = lm.m3 - 6.0 * g * g * g;
    const double num = (lm.m4 - 24.0 * g * g * g * g) * (lm.m2 - 2.0 * g * g);
    if (den == 0.0) return std::nullopt;
    const double s = 0.75 * num / (den * den);
    if (!std::isfinite(s)) return std::nullopt;
    return s;
}

/// Closed-form inverse of s^(2)(rho). Defined on the open interval
/// (2/3, 3/4): the formula is singular at 3/4 and gives rho = 0 at 2/3.
inline std::optional<double> rho_from_statistic(double S) {
    if (!(S > 2.0 / 3.0 && S < 0.75)) return std::nullopt;
    return (-4.0 + 6.0 * S + std::sqrt(3.0 * S - 2.0)) / (4.0 * S - 3.0);
}

inline std::optional<double> rho_estimate(const OrderedSample& s, std::size_t k) {
    const auto S = rho_statistic(log_moments_all(s, k));
    if (!S) return std::nullopt;
    return rho_from_statistic(*S);
}

struct KRho {
    std::size_t k_rho = 0;
    double rho_hat = -1.0;
    bool fallback = true;
};

/// Largest k <= min(m - 1, 2m / log log m) at which rho_k^(2) exists; rho = -1
/// when no such k exists.
inline std::size_t k_rho_ceiling(std::size_t m) {
    const double md = static_cast<double>(m);
    const double cap = 2.0 * md / std::log(std::log(md));
    return std::min<std::size_t>(m - 1, static_cast<std::size_t>(std::floor(cap)));
}

inline KRho select_k_rho(const OrderedSample& s) {
    if (s.m() < 3) throw ValidationError("select_k_rho: need at least 3 positive values");
    for (std::size_t k = k_rho_ceiling(s.m()); k >= 1; --k) {
        if (auto rho = rho_estimate(s, k)) return {k, *rho, false};
    }
    return {};
}

struct TailEstimate {
    std::size_t k = 0;
    std::size_t k_rho = 0;
    double gamma_hill = 0.0;
    double gamma_bc = 0.0;
    double rho_hat = -1.0;
    bool rho_fallback_used = false;
    double threshold = 0.0;  // Z_{n-k,n}
    LogMoments moments;
};

inline double bc_hill(const LogMoments& lm, double rho) {
    if (!(rho < 0.0)) throw ValidationError("bc_hill: rho must be negative");
    const double g = lm.m1;
    if (g <= 0.0) throw ComputationError("bc_hill: Hill estimate is zero (degenerate tail)");
    return g - (lm.m2 - 2.0 * g * g) / (2.0 * g * rho / (1.0 - rho));
}

inline double bc_hill(const OrderedSample& s, std::size_t k, double rho) {
    return bc_hill(log_moments_all(s, k), rho);
}

inline TailEstimate tail_estimate(const OrderedSample& s, std::size_t k, const KRho& kr) {
    TailEstimate te;
    te.k = k;
    te.k_rho = kr.k_rho;
    te.rho_hat = kr.rho_hat;
    te.rho_fallback_used = kr.fallback;
    te.moments = log_moments_all(s, k);
    te.gamma_hill = te.moments.m1;
    te.gamma_bc = bc_hill(te.moments, kr.rho_hat);
    te.threshold = s.threshold(k);
    return te;
}

/// Bias-corrected extrapolated quantile q_{1-p}:
///   Z_{n-k,n} r^{gamma_bc} (1 - [M2 - 2 gH^2](1 - rho)^2 / (2 gH rho^2) [1 - r^rho]),
/// r = k / (n_eff p).
inline double ugh_quantile(const TailEstimate& te, double p, std::size_t n_eff) {
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("ugh_quantile: p must lie in (0,1)");
    if (n_eff == 0) throw ValidationError("ugh_quantile: n_eff must be positive");
    const double r = static_cast<double>(te.k) / (static_cast<double>(n_eff) * p);
    const double g = te.gamma_hill;
    const double rho = te.rho_hat;
    const double bias = (te.moments.m2 - 2.0 * g * g) * (1.0 - rho) * (1.0 - rho) / (2.0 * g * rho * rho);
    return te.threshold * std::pow(r, te.gamma_bc) * (1.0 - bias * (1.0 - std::pow(r, rho)));
}

inline double ugh_quantile(const OrderedSample& s, std::size_t k, const KRho& kr, double p,
                           std::size_t n_eff) {
    return ugh_quantile(tail_estimate(s, k, kr), p, n_eff);
}

inline double weissman_quantile(const OrderedSample& s, std::size_t k, double gamma, double p,
                                std::size_t n_eff) {
    s.check_k_positive(k);
    if (!(gamma >= 0.0)) throw ValidationError("weissman_quantile: gamma must be >= 0");
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("weissman_quantile: p must lie in (0,1)");
    const double r = static_cast<double>(k) / (static_cast<double>(n_eff) * p);
    return std::pow(r, gamma) * s.threshold(k);
}

struct GpdFit {
    double xi = 0.0;
    double beta = 0.0;
    double threshold = 0.0;
    std::size_t k = 0;
    bool converged = false;
    double neg_loglik = 0.0;
};

inline constexpr double kXiZero = 1e-10;

/// Negative GPD log-likelihood of the excesses; +inf outside the support.
inline double gpd_neg_loglik(std::span<const double> excesses, double xi, double beta) {
    if (!(beta > 0.0)) return optim::kInf;
    const double k = static_cast<double>(excesses.size());
    double total = k * std::log(beta);
    if (std::abs(xi) < kXiZero) {
        for (double y : excesses) total += y / beta;
        return total;
    }
    const double c = 1.0 + 1.0 / xi;
    for (double y : excesses) {
        const double a = xi * y / beta;
        if (!(a > -1.0)) return optim::kInf;
        total += c * std::log1p(a);
    }
    return total;
}

inline GpdFit gpd_fit(const OrderedSample& s, std::size_t k) {
    s.check_k_any(k);
    GpdFit fit;
    fit.k = k;
    fit.threshold = s.threshold(k);

    std::vector<double> excesses(k);
    for (std::size_t i = 1; i <= k; ++i) excesses[i - 1] = s.top(i) - fit.threshold;
    double mean = 0.0;
    for (double y : excesses) mean += y;
    mean /= static_cast<double>(k);

    const auto [lo, hi] = std::minmax_element(excesses.begin(), excesses.end());
    if (*hi - *lo <= 1e-12 * std::max(1.0, std::abs(*hi))) {
        // Zero-variance excesses: no likelihood maximum.
        fit.xi = 0.0;
        fit.beta = mean > 0.0 ? mean : 1e-12;
        fit.converged = false;
        fit.neg_loglik = gpd_neg_loglik(excesses, fit.xi, fit.beta);
        return fit;
    }

    constexpr double xi0 = 0.1;
    optim::OptimProblem problem{
        [&](std::span<const double> v) { return gpd_neg_loglik(excesses, v[0], v[1]); },
        std::vector<double>{xi0, mean * (1.0 - xi0)},
        std::vector<optim::Bounds>{{}, {0.0, optim::kInf}}};
    const auto res = optim::minimize(problem, 1e-10, 5000);
    fit.xi = res.argmin[0];
    fit.beta = res.argmin[1];
    fit.converged = res.converged;
    fit.neg_loglik = res.value;
    return fit;
}

/// POT quantile u + (beta/xi) [(n_eff p / k)^(-xi) - 1]; exponential limit at xi = 0.
inline double gpd_quantile(const GpdFit& fit, double p, std::size_t n_eff) {
    const double tail_frac = static_cast<double>(fit.k) / static_cast<double>(n_eff);
    if (!(p > 0.0) || p > tail_frac * (1.0 + 1e-12))
        throw ValidationError("gpd_quantile: p must lie in (0, k/n_eff]");
    const double r = static_cast<double>(n_eff) * p / static_cast<double>(fit.k);
    if (std::abs(fit.xi) < kXiZero) return fit.threshold - fit.beta * std::log(r);
    return fit.threshold + fit.beta / fit.xi * (std::pow(r, -fit.xi) - 1.0);
}

}  // namespace garch_ugh::evt
