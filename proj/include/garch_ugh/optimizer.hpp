#pragma once

// Bounded Nelder-Mead. Bounds are handled by mapping each coordinate onto an
// unconstrained variable:
//   two-sided [lo, hi]  x = lo + (hi - lo) / (1 + exp(-y))
//   lower only          x = lo + exp(y)
//   upper only          x = hi - exp(y)
// so every trial point is strictly feasible and the search itself is plain
// unconstrained Nelder-Mead.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "garch_ugh/error.hpp"

namespace garch_ugh::optim {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Bounds {
    double lower = -kInf;
    double upper = kInf;
};

template <class Objective>
struct OptimProblem {
    Objective objective;  // callable: double(std::span<const double>)
    std::vector<double> initial;
    std::vector<Bounds> bounds;  // empty means unbounded in every coordinate
};

struct OptimResult {
    std::vector<double> argmin;
    double value = kInf;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

struct NelderMeadOptions {
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;
    // Edge length of the starting simplex, in transformed coordinates.
    double initial_step = 0.1;
    // Deterministic restarts from the best vertex after convergence; stops as
    // soon as a restart improves the value by less than tol.
    int max_restarts = 4;
};

namespace detail {

class BoundTransform {
public:
    explicit BoundTransform(std::vector<Bounds> b) : bounds_(std::move(b)) {}

    double to_bounded(std::size_t i, double y) const {
        const auto [lo, hi] = get(i);
        const bool has_lo = std::isfinite(lo), has_hi = std::isfinite(hi);
        if (has_lo && has_hi) return lo + (hi - lo) / (1.0 + std::exp(-y));
        if (has_lo) return lo + std::exp(y);
        if (has_hi) return hi - std::exp(y);
        return y;
    }

    double to_free(std::size_t i, double x) const {
        const auto [lo, hi] = get(i);
        const bool has_lo = std::isfinite(lo), has_hi = std::isfinite(hi);
        if (has_lo && has_hi) return std::log((x - lo) / (hi - x));
        if (has_lo) return std::log(x - lo);
        if (has_hi) return std::log(hi - x);
        return x;
    }

    bool strictly_inside(std::size_t i, double x) const {
        const auto [lo, hi] = get(i);
        return x > lo && x < hi;
    }

private:
    Bounds get(std::size_t i) const { return bounds_.empty() ? Bounds{} : bounds_[i]; }

    std::vector<Bounds> bounds_;
};

}  // namespace detail

/// Minimizes problem.objective with Nelder-Mead (reflection 1, expansion 2,
/// contraction 0.5, shrink 0.5 by default). Converged means the spread of
/// objective values over the simplex fell below `tol`. Non-finite objective
/// values during the search count as +inf.
template <class Objective>
OptimResult minimize(const OptimProblem<Objective>& problem, double tol, int max_iter,
                     const NelderMeadOptions& opts = {}) {
    if (!(tol > 0.0)) throw ValidationError("minimize: tol must be > 0");
    if (max_iter <= 0) throw ValidationError("minimize: max_iter must be > 0");
    const std::size_t dim = problem.initial.size();
    if (dim == 0) throw ValidationError("minimize: empty initial point");
    if (!problem.bounds.empty() && problem.bounds.size() != dim)
        throw ValidationError("minimize: bounds size does not match dimension");

    const detail::BoundTransform tr(problem.bounds);
    for (std::size_t i = 0; i < dim; ++i)
        if (!tr.strictly_inside(i, problem.initial[i]))
            throw ValidationError("minimize: initial point not strictly inside bounds");

    OptimResult res;
    std::vector<double> xbuf(dim);
    auto eval = [&](const std::vector<double>& y) {
        for (std::size_t i = 0; i < dim; ++i) xbuf[i] = tr.to_bounded(i, y[i]);
        ++res.evaluations;
        const double v = problem.objective(std::span<const double>(xbuf));
        return std::isfinite(v) ? v : kInf;
    };

    std::vector<double> y0(dim);
    for (std::size_t i = 0; i < dim; ++i) y0[i] = tr.to_free(i, problem.initial[i]);

    const double f_initial = eval(y0);
    if (!std::isfinite(f_initial))
        throw ValidationError("minimize: objective is not finite at the initial point");

    std::vector<std::vector<double>> simplex(dim + 1, std::vector<double>(dim));
    std::vector<double> fvals(dim + 1);
    std::vector<std::size_t> order(dim + 1);
    std::vector<double> centroid(dim), xr(dim), xe(dim), xc(dim);

    auto build_simplex = [&](const std::vector<double>& base, double fbase) {
        simplex[0] = base;
        fvals[0] = fbase;
        for (std::size_t j = 1; j <= dim; ++j) {
            simplex[j] = base;
            simplex[j][j - 1] += opts.initial_step;
            fvals[j] = eval(simplex[j]);
        }
    };
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return fvals[a] < fvals[b]; });
        auto s2 = simplex;
        auto f2 = fvals;
        for (std::size_t j = 0; j <= dim; ++j) {
            simplex[j] = std::move(s2[order[j]]);
            fvals[j] = f2[order[j]];
        }
    };
    auto lerp = [&](std::vector<double>& out, const std::vector<double>& from,
                    const std::vector<double>& to, double t) {
        for (std::size_t i = 0; i < dim; ++i) out[i] = from[i] + t * (to[i] - from[i]);
    };

    // One Nelder-Mead run; returns true on convergence.
    auto run = [&]() -> bool {
        while (res.iterations < max_iter) {
            sort_simplex();
            if (fvals[dim] - fvals[0] < tol) return true;
            ++res.iterations;

            std::fill(centroid.begin(), centroid.end(), 0.0);
            for (std::size_t j = 0; j < dim; ++j)
                for (std::size_t i = 0; i < dim; ++i) centroid[i] += simplex[j][i];
            for (auto& c : centroid) c /= static_cast<double>(dim);

            const auto& worst = simplex[dim];
            lerp(xr, centroid, worst, -opts.reflection);
            const double fr = eval(xr);

            if (fr < fvals[0]) {
                lerp(xe, centroid, xr, opts.expansion);
                const double fe = eval(xe);
                if (fe < fr) {
                    simplex[dim] = xe;
                    fvals[dim] = fe;
                } else {
                    simplex[dim] = xr;
                    fvals[dim] = fr;
                }
                continue;
            }
            if (fr < fvals[dim - 1]) {
                simplex[dim] = xr;
                fvals[dim] = fr;
                continue;
            }
            const bool outside = fr < fvals[dim];
            lerp(xc, centroid, outside ? xr : worst, opts.contraction);
            const double fc = eval(xc);
            if (fc < (outside ? fr : fvals[dim]) || (outside && fc == fr)) {
                simplex[dim] = xc;
                fvals[dim] = fc;
                continue;
            }
            for (std::size_t j = 1; j <= dim; ++j) {
                lerp(simplex[j], simplex[0], simplex[j], opts.shrink);
                fvals[j] = eval(simplex[j]);
            }
        }
        sort_simplex();
        return false;
    };

    build_simplex(y0, f_initial);
    bool converged = run();
    for (int r = 0; converged && r < opts.max_restarts; ++r) {
        const double before = fvals[0];
        const std::vector<double> best = simplex[0];
        build_simplex(best, before);
        converged = run();
        if (converged && before - fvals[0] < tol) break;
    }

    res.converged = converged;
    res.value = fvals[0];
    res.argmin.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) res.argmin[i] = tr.to_bounded(i, simplex[0][i]);
    return res;
}

}  // namespace garch_ugh::optim
