#pragma once

// AR(1)-GARCH(1,1) filtering:
//   X_t = mu_t + sigma_t Z_t,  mu_t = phi X_{t-1},
//   sigma_t^2 = kappa0 + kappa1 (X_{t-1} - mu_{t-1})^2 + kappa2 sigma_{t-1}^2,
// fitted by Gaussian quasi-maximum likelihood.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "garch_ugh/error.hpp"
#include "garch_ugh/optimizer.hpp"

namespace garch_ugh::garch {

struct GarchParams {
    double phi = 0.0;
    double kappa0 = 0.0;
    double kappa1 = 0.0;
    double kappa2 = 0.0;

    bool stationary() const noexcept { return kappa1 + kappa2 < 1.0; }
    bool valid() const noexcept {
        return std::abs(phi) < 1.0 && kappa0 > 0.0 && kappa1 > 0.0 && kappa2 > 0.0;
    }
    double unconditional_variance() const noexcept { return kappa0 / (1.0 - kappa1 - kappa2); }
};

/// State just before the first observation of a window.
struct RecursionInit {
    double eps_sq = 0.0;    // (X_{-1} - mu_{-1})^2
    double sigma_sq = 0.0;  // sigma_{-1}^2
    double prev_x = 0.0;    // X_{-1}, feeds mu_0 = phi X_{-1}
};

struct FilterPath {
    std::vector<double> mu;
    std::vector<double> sigma;
    std::vector<double> residuals;
    double neg_loglik = 0.0;
};

struct GarchFit {
    GarchParams params;
    std::vector<double> mu;
    std::vector<double> sigma;
    std::vector<double> residuals;
    double mu_next = 0.0;
    double sigma_next = 0.0;
    double neg_loglik = 0.0;
    bool converged = false;
    bool stationary = false;
    int iterations = 0;
};

/// Gaussian QMLE criterion sum_t [log sigma_t^2 + eps_t^2 / sigma_t^2], with no
/// path storage. Returns +inf on any non-finite or non-positive variance.
inline double neg_loglik(std::span<const double> x, const GarchParams& p, const RecursionInit& init) {
    double prev_x = init.prev_x;
    double eps_sq = init.eps_sq;
    double sig_sq = init.sigma_sq;
    double total = 0.0;
    for (double xt : x) {
        sig_sq = p.kappa0 + p.kappa1 * eps_sq + p.kappa2 * sig_sq;
        if (!(sig_sq > 0.0) || !std::isfinite(sig_sq)) return optim::kInf;
        const double eps = xt - p.phi * prev_x;
        eps_sq = eps * eps;
        total += std::log(sig_sq) + eps_sq / sig_sq;
        prev_x = xt;
    }
    return std::isfinite(total) ? total : optim::kInf;
}

inline FilterPath garch_recursion(std::span<const double> x, const GarchParams& p,
                                  const RecursionInit& init) {
    if (x.size() < 2) throw ValidationError("garch_recursion: need at least 2 observations");
    if (!(p.kappa0 > 0.0) || p.kappa1 < 0.0 || p.kappa2 < 0.0)
        throw ValidationError("garch_recursion: kappa parameters must be positive");
    if (init.eps_sq < 0.0 || init.sigma_sq < 0.0)
        throw ValidationError("garch_recursion: initial values must be nonnegative");

    const std::size_t n = x.size();
    FilterPath out;
    out.mu.resize(n);
    out.sigma.resize(n);
    out.residuals.resize(n);

    double prev_x = init.prev_x;
    double eps_sq = init.eps_sq;
    double sig_sq = init.sigma_sq;
    double total = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        sig_sq = p.kappa0 + p.kappa1 * eps_sq + p.kappa2 * sig_sq;
        if (!(sig_sq > 0.0) || !std::isfinite(sig_sq))
            throw ComputationError("garch_recursion: non-finite variance at t=" + std::to_string(t));
        const double mu = p.phi * prev_x;
        const double eps = x[t] - mu;
        const double sig = std::sqrt(sig_sq);
        out.mu[t] = mu;
        out.sigma[t] = sig;
        out.residuals[t] = eps / sig;
        eps_sq = eps * eps;
        total += std::log(sig_sq) + eps_sq / sig_sq;
        prev_x = x[t];
    }
    if (!std::isfinite(total)) throw ComputationError("garch_recursion: non-finite likelihood");
    out.neg_loglik = total;
    return out;
}

struct SimulatedPath {
    RecursionInit init;  // state just before x[0]
    std::vector<double> x;
    std::vector<double> mu;
    std::vector<double> sigma;
    std::vector<double> z;
};

/// Standard normal innovations.
struct GaussianInnovations {
    std::normal_distribution<double> dist{0.0, 1.0};
    template <class Rng>
    double operator()(Rng& rng) { return dist(rng); }
};

/// Student-t innovations rescaled to unit variance (requires df > 2).
struct StudentInnovations {
    explicit StudentInnovations(double df) : dist(df), scale(std::sqrt((df - 2.0) / df)) {
        if (!(df > 2.0)) throw ValidationError("StudentInnovations: df must exceed 2");
    }
    template <class Rng>
    double operator()(Rng& rng) { return scale * dist(rng); }

    std::student_t_distribution<double> dist;
    double scale;
};

/// Drives innovations through the AR(1)-GARCH(1,1) recursion from the
/// unconditional variance, discarding the first `burn_in` values. The returned
/// path keeps the state preceding x[0] so the recursion can be replayed exactly.
template <class Innovations = GaussianInnovations>
SimulatedPath simulate_path(const GarchParams& p, std::size_t n, std::size_t burn_in,
                            std::uint64_t seed, Innovations innovations = {}) {
    if (!p.valid()) throw ValidationError("simulate: invalid parameters");
    if (!p.stationary()) throw ValidationError("simulate: parameters are not stationary");
    if (n == 0 || burn_in == 0) throw ValidationError("simulate: n and burn_in must be > 0");

    std::mt19937_64 rng(seed);
    SimulatedPath path;
    path.x.reserve(n);
    path.mu.reserve(n);
    path.sigma.reserve(n);
    path.z.reserve(n);

    double prev_x = 0.0;
    double eps_sq = p.unconditional_variance();
    double sig_sq = p.unconditional_variance();
    for (std::size_t t = 0; t < burn_in + n; ++t) {
        if (t == burn_in) path.init = {eps_sq, sig_sq, prev_x};
        sig_sq = p.kappa0 + p.kappa1 * eps_sq + p.kappa2 * sig_sq;
        const double mu = p.phi * prev_x;
        const double z = innovations(rng);
        const double sig = std::sqrt(sig_sq);
        const double x = mu + sig * z;
        eps_sq = (x - mu) * (x - mu);
        prev_x = x;
        if (t >= burn_in) {
            path.x.push_back(x);
            path.mu.push_back(mu);
            path.sigma.push_back(sig);
            path.z.push_back(z);
        }
    }
    return path;
}

template <class Innovations = GaussianInnovations>
std::vector<double> simulate(const GarchParams& p, std::size_t n, std::size_t burn_in,
                             std::uint64_t seed, Innovations innovations = {}) {
    return simulate_path(p, n, burn_in, seed, std::move(innovations)).x;
}

inline constexpr std::size_t kMinFitWindow = 100;

struct QmleOptions {
    double tol = 1e-9;
    int max_iter = 20000;
};

/// Starting state used for every fitted window: sigma^2 = sample variance,
/// eps^2 = 0, pre-window return 0.
inline RecursionInit default_init(std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return {0.0, ss / (n - 1.0), 0.0};
}

inline GarchFit fit_qmle(std::span<const double> x, const QmleOptions& opts = {}) {
    if (x.size() < kMinFitWindow)
        throw ValidationError("fit_qmle: window must hold at least " +
                              std::to_string(kMinFitWindow) + " observations");
    for (double v : x)
        if (!std::isfinite(v)) throw ValidationError("fit_qmle: non-finite observation");

    const RecursionInit init = default_init(x);
    const double var = init.sigma_sq;
    const bool constant = std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
    if (constant || !(var > 0.0)) throw ComputationError("fit_qmle: zero-variance window");

    optim::OptimProblem problem{
        [&](std::span<const double> v) {
            return neg_loglik(x, GarchParams{v[0], v[1], v[2], v[3]}, init);
        },
        std::vector<double>{0.0, 0.05 * var, 0.05, 0.90},
        std::vector<optim::Bounds>{{-1.0, 1.0}, {0.0, optim::kInf}, {0.0, optim::kInf}, {0.0, optim::kInf}}};
    const auto res = optim::minimize(problem, opts.tol, opts.max_iter);

    GarchFit fit;
    fit.params = {res.argmin[0], res.argmin[1], res.argmin[2], res.argmin[3]};
    fit.converged = res.converged;
    fit.iterations = res.iterations;
    fit.stationary = fit.params.stationary();

    auto path = garch_recursion(x, fit.params, init);
    fit.mu = std::move(path.mu);
    fit.sigma = std::move(path.sigma);
    fit.residuals = std::move(path.residuals);
    fit.neg_loglik = path.neg_loglik;

    const double x_last = x.back();
    const double eps_last = x_last - fit.mu.back();
    const double s_last = fit.sigma.back();
    fit.mu_next = fit.params.phi * x_last;
    fit.sigma_next = std::sqrt(fit.params.kappa0 + fit.params.kappa1 * eps_last * eps_last +
                               fit.params.kappa2 * s_last * s_last);
    return fit;
}

}  // namespace garch_ugh::garch
