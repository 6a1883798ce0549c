#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>

#include "garch_ugh/evt.hpp"
#include "oracles.hpp"

using namespace garch_ugh;
using Catch::Approx;

namespace {
const double e = std::exp(1.0);

// Log-moments straight from the definition on a descending copy of the data.
double direct_moment(std::vector<double> x, std::size_t k, int alpha) {
    std::sort(x.begin(), x.end(), std::greater<>());
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += std::pow(std::log(x[i]) - std::log(x[k]), alpha);
    return sum / static_cast<double>(k);
}

std::optional<double> direct_rho(const std::vector<double>& x, std::size_t k) {
    const double m1 = direct_moment(x, k, 1), m2 = direct_moment(x, k, 2);
    const double m3 = direct_moment(x, k, 3), m4 = direct_moment(x, k, 4);
    const double den = m3 - 6 * std::pow(m1, 3);
    if (den == 0.0) return std::nullopt;
    const double S = 0.75 * (m4 - 24 * std::pow(m1, 4)) * (m2 - 2 * m1 * m1) / (den * den);
    if (!(S > 2.0 / 3.0 && S < 0.75)) return std::nullopt;
    return (-4 + 6 * S + std::sqrt(3 * S - 2)) / (4 * S - 3);
}
}  // namespace

TEST_CASE("OrderedSample bookkeeping") {
    const std::vector<double> x{3.0, -1.0, 0.0, 2.0, 5.0};
    evt::OrderedSample s(x);
    CHECK(s.n() == 5);
    CHECK(s.m() == 3);
    CHECK(s.top(1) == 5.0);
    CHECK(s.threshold(1) == 3.0);
    CHECK(s.threshold(2) == 2.0);
    CHECK_NOTHROW(s.check_k_positive(2));
    CHECK_THROWS_AS(s.check_k_positive(3), ValidationError);
    CHECK_THROWS_AS(s.check_k_positive(0), ValidationError);
    CHECK_THROWS_AS(evt::OrderedSample(std::vector<double>{1.0, std::nan("")}), ValidationError);
}

TEST_CASE("log_moments hand example") {
    evt::OrderedSample s(std::vector<double>{0.5, 1.0, e, e * e});
    CHECK(evt::log_moments(s, 2, 1) == Approx(1.5).epsilon(1e-14));
    CHECK(evt::log_moments(s, 2, 2) == Approx(2.5).epsilon(1e-14));
    CHECK(evt::hill(s, 2) == Approx(1.5).epsilon(1e-14));
    CHECK_THROWS_AS(evt::log_moments(s, 2, 5), ValidationError);
    CHECK_THROWS_AS(evt::log_moments(s, 4, 1), ValidationError);

    evt::OrderedSample neg(std::vector<double>{-2.0, -1.0, 0.5, 1.0, 2.0});
    CHECK_THROWS_AS(evt::hill(neg, 3), ValidationError);
}

TEST_CASE("log_moments vanish on flat tops") {
    evt::OrderedSample s(std::vector<double>{0.1, 0.2, 2.0, 2.0, 2.0, 2.0});
    for (int a = 1; a <= 4; ++a) CHECK(evt::log_moments(s, 3, a) == 0.0);
}

TEST_CASE("log_moments match direct summation and are scale invariant") {
    const auto x = oracle::pareto_sample(0.4, 800, 5);
    std::vector<double> y(x);
    for (auto& v : y) v *= 123.4;
    evt::OrderedSample sx(x), sy(y);
    for (std::size_t k : {10u, 100u, 400u}) {
        for (int a = 1; a <= 4; ++a) {
            CHECK(evt::log_moments(sx, k, a) == Approx(direct_moment(x, k, a)).epsilon(1e-10));
            CHECK(evt::log_moments(sy, k, a) == Approx(evt::log_moments(sx, k, a)).epsilon(1e-10));
        }
    }
}

TEST_CASE("Hill on exact Pareto order statistics") {
    const double gamma = 0.7;
    const std::size_t k = 40;
    std::vector<double> x{0.2, 0.5, 1.0};  // threshold 1.0 is Z_{n-k,n}
    double expected = 0.0;
    for (std::size_t i = 1; i <= k; ++i) {
        x.push_back(std::pow(static_cast<double>(k) / i, gamma));
        expected += std::log(static_cast<double>(k) / i);
    }
    expected *= gamma / k;
    evt::OrderedSample s(x);
    CHECK(evt::hill(s, k) == Approx(expected).epsilon(1e-12));
}

TEST_CASE("Hill on a Pareto sample") {
    evt::OrderedSample s(oracle::pareto_sample(0.5, 10000, 2024));
    CHECK(std::abs(evt::hill(s, 500) - 0.5) < 0.1);
}

TEST_CASE("rho from the statistic") {
    CHECK(evt::rho_from_statistic(0.68).value() == Approx(-1.0).epsilon(1e-12));
    CHECK_FALSE(evt::rho_from_statistic(0.66).has_value());
    CHECK_FALSE(evt::rho_from_statistic(2.0 / 3.0).has_value());
    CHECK_FALSE(evt::rho_from_statistic(0.75).has_value());
    CHECK_FALSE(evt::rho_from_statistic(0.8).has_value());
    CHECK(oracle::s2_of_rho(-1.0) == Approx(0.68).epsilon(1e-15));
    for (int i = 0; i <= 49; ++i) {
        const double rho = -5.0 + 0.1 * i;
        const auto back = evt::rho_from_statistic(oracle::s2_of_rho(rho));
        REQUIRE(back.has_value());
        CHECK(std::abs(*back - rho) < 1e-9);
    }
}

TEST_CASE("rho statistic is empty on degenerate moments") {
    CHECK_FALSE(evt::rho_statistic(evt::LogMoments{}).has_value());
}

TEST_CASE("k_rho ceiling") {
    CHECK(std::abs(std::log(std::log(100.0)) - 1.5272) < 1e-4);
    CHECK(evt::k_rho_ceiling(100) == 99);
    CHECK(evt::k_rho_ceiling(1000) == std::min<std::size_t>(999, static_cast<std::size_t>(2000.0 / std::log(std::log(1000.0)))));
}

TEST_CASE("select_k_rho agrees with a per-k scan") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto x = oracle::burr_sample(0.5, -0.5, 100, seed);
        evt::OrderedSample s(x);
        REQUIRE(s.m() == 100);
        std::size_t want_k = 0;
        double want_rho = -1.0;
        for (std::size_t k = 99; k >= 1; --k) {
            if (auto r = direct_rho(x, k)) {
                want_k = k;
                want_rho = *r;
                break;
            }
        }
        const auto got = evt::select_k_rho(s);
        CHECK(got.k_rho == want_k);
        CHECK(got.fallback == (want_k == 0));
        CHECK(got.rho_hat == Approx(want_rho).epsilon(1e-9));
    }
}

TEST_CASE("select_k_rho on an exact Pareto quantile sample") {
    // Z_{n-i+1,n} = (n/i)^gamma; scanning every k against the direct formula.
    std::vector<double> x;
    for (std::size_t i = 1; i <= 300; ++i) x.push_back(std::pow(300.0 / i, 0.5));
    evt::OrderedSample s(x);
    const std::size_t ceil = evt::k_rho_ceiling(s.m());
    std::size_t want = 0;
    for (std::size_t k = ceil; k >= 1; --k)
        if (direct_rho(x, k)) {
            want = k;
            break;
        }
    CHECK(evt::select_k_rho(s).k_rho == want);
}

TEST_CASE("select_k_rho falls back to -1") {
    evt::OrderedSample s(std::vector<double>(20, 5.0));
    const auto kr = evt::select_k_rho(s);
    CHECK(kr.k_rho == 0);
    CHECK(kr.rho_hat == -1.0);
    CHECK(kr.fallback);
    CHECK_THROWS_AS(evt::select_k_rho(evt::OrderedSample(std::vector<double>{-1, 1, 2})), ValidationError);
}

TEST_CASE("bias-corrected Hill") {
    CHECK(evt::bc_hill(evt::LogMoments{0.4, 2 * 0.16, 0, 0}, -0.7) == Approx(0.4).epsilon(1e-14));
    CHECK(evt::bc_hill(evt::LogMoments{1.5, 2.5, 0, 0}, -1.0) == Approx(1.5 - 4.0 / 3.0).epsilon(1e-12));
    CHECK_THROWS_AS(evt::bc_hill(evt::LogMoments{0.0, 0.0, 0, 0}, -1.0), ComputationError);
    CHECK_THROWS_AS(evt::bc_hill(evt::LogMoments{0.5, 0.5, 0, 0}, 0.0), ValidationError);

    const auto x = oracle::burr_sample(0.5, -0.5, 2000, 8);
    std::vector<double> y(x);
    for (auto& v : y) v *= 0.003;
    CHECK(evt::bc_hill(evt::OrderedSample(y), 200, -0.8) ==
          Approx(evt::bc_hill(evt::OrderedSample(x), 200, -0.8)).epsilon(1e-10));
}

TEST_CASE("bias correction helps on Burr samples") {
    const auto x = oracle::burr_sample(0.5, -0.5, 5000, 99);
    evt::OrderedSample s(x);
    const auto kr = evt::select_k_rho(s);
    double err_h = 0.0, err_bc = 0.0;
    for (double f : {0.05, 0.10, 0.15, 0.20, 0.25}) {
        const auto te = evt::tail_estimate(s, evt::k_from_fraction(s, f), kr);
        err_h += std::abs(te.gamma_hill - 0.5);
        err_bc += std::abs(te.gamma_bc - 0.5);
    }
    CHECK(err_bc <= err_h);
}

TEST_CASE("UGH quantile fixed point and Pareto accuracy") {
    evt::OrderedSample s(oracle::pareto_sample(0.5, 10000, 2024));
    const auto kr = evt::select_k_rho(s);
    // k = n p: no extrapolation
    CHECK(evt::ugh_quantile(s, 500, kr, 0.05, 10000) == Approx(s.threshold(500)).epsilon(1e-14));
    const double q = evt::ugh_quantile(s, 500, kr, 1e-4, 10000);
    CHECK(std::abs(q / 100.0 - 1.0) < 0.15);
}

TEST_CASE("UGH quantile is monotone in p") {
    evt::OrderedSample s(oracle::burr_sample(0.5, -0.5, 3000, 4));
    const auto kr = evt::select_k_rho(s);
    const auto te = evt::tail_estimate(s, 300, kr);
    REQUIRE(te.gamma_bc > 0.0);
    double prev = std::numeric_limits<double>::infinity();
    for (double p = 1e-5; p <= 0.1; p *= 1.25) {
        const double q = evt::ugh_quantile(te, p, s.n());
        CHECK(q <= prev);
        prev = q;
    }
}

TEST_CASE("Weissman quantile") {
    evt::OrderedSample s(oracle::pareto_sample(0.5, 1000, 1));
    const double th = s.threshold(100);
    CHECK(evt::weissman_quantile(s, 100, 0.5, 0.1, 1000) == Approx(th).epsilon(1e-14));
    CHECK(evt::weissman_quantile(s, 100, 0.0, 1e-4, 1000) == Approx(th).epsilon(1e-14));
    CHECK(evt::weissman_quantile(s, 100, 0.5, 0.025, 1000) == Approx(2.0 * th).epsilon(1e-14));
    CHECK_THROWS_AS(evt::weissman_quantile(s, 100, -0.1, 0.01, 1000), ValidationError);
}

TEST_CASE("quantiles scale linearly with the sample") {
    const auto x = oracle::burr_sample(0.4, -0.8, 3000, 21);
    std::vector<double> y(x);
    const double c = 7.25;
    for (auto& v : y) v *= c;
    evt::OrderedSample sx(x), sy(y);
    const auto kx = evt::select_k_rho(sx), ky = evt::select_k_rho(sy);
    CHECK(ky.rho_hat == Approx(kx.rho_hat).epsilon(1e-10));
    const double qx = evt::ugh_quantile(sx, 300, kx, 1e-3, 3000);
    const double qy = evt::ugh_quantile(sy, 300, ky, 1e-3, 3000);
    CHECK(std::abs(qy / (c * qx) - 1.0) < 1e-10);
    const double wx = evt::weissman_quantile(sx, 300, 0.4, 1e-3, 3000);
    const double wy = evt::weissman_quantile(sy, 300, 0.4, 1e-3, 3000);
    CHECK(std::abs(wy / (c * wx) - 1.0) < 1e-10);
}

namespace {
// Sample whose top k values sit at threshold 0 + GPD excesses.
std::vector<double> gpd_with_threshold(double xi, double beta, std::size_t k, std::uint64_t seed) {
    auto x = oracle::gpd_sample(xi, beta, k, seed);
    x.push_back(0.0);
    x.push_back(-1.0);
    return x;
}
}  // namespace

TEST_CASE("GPD fit recovers parameters") {
    const auto x = gpd_with_threshold(0.3, 1.0, 2000, 17);
    evt::OrderedSample s(x);
    const auto fit = evt::gpd_fit(s, 2000);
    CHECK(fit.threshold == 0.0);
    CHECK(fit.converged);
    CHECK(std::abs(fit.xi - 0.3) < 0.1);
    CHECK(std::abs(fit.beta - 1.0) < 0.15);
    CHECK(fit.beta > 0.0);
}

TEST_CASE("GPD fit on equal excesses is flagged") {
    evt::OrderedSample s(std::vector<double>{0.0, 1.0, 2.0, 2.0, 2.0, 2.0});
    const auto fit = evt::gpd_fit(s, 4);
    CHECK_FALSE(fit.converged);
    CHECK(fit.beta > 0.0);
}

TEST_CASE("GPD fit is scale equivariant") {
    const auto x = gpd_with_threshold(0.2, 2.0, 1000, 5);
    std::vector<double> y(x);
    for (auto& v : y) v *= 0.01;
    const auto a = evt::gpd_fit(evt::OrderedSample(x), 1000);
    const auto b = evt::gpd_fit(evt::OrderedSample(y), 1000);
    CHECK(std::abs(a.xi - b.xi) < 1e-3);
    CHECK(b.beta / (0.01 * a.beta) == Approx(1.0).margin(1e-3));
}

TEST_CASE("GPD quantile") {
    evt::GpdFit fit{0.5, 1.0, 0.0, 100, true, 0.0};
    CHECK(evt::gpd_quantile(fit, 0.1, 1000) == Approx(0.0).margin(1e-14));
    CHECK(evt::gpd_quantile(fit, 0.025, 1000) == Approx(2.0).epsilon(1e-14));
    evt::GpdFit expo{0.0, 2.0, 1.0, 100, true, 0.0};
    CHECK(evt::gpd_quantile(expo, 0.025, 1000) == Approx(1.0 + 2.0 * std::log(4.0)).epsilon(1e-14));
    double prev = std::numeric_limits<double>::infinity();
    for (double p = 1e-5; p <= 0.1; p *= 1.3) {
        const double q = evt::gpd_quantile(fit, p, 1000);
        CHECK(q < prev);
        prev = q;
    }
    CHECK_THROWS_AS(evt::gpd_quantile(fit, 0.2, 1000), ValidationError);
    CHECK_THROWS_AS(evt::gpd_quantile(fit, 0.0, 1000), ValidationError);
}

TEST_CASE("k from fraction is capped by the positive count") {
    evt::OrderedSample s(std::vector<double>{-3, -2, -1, 1, 2, 3, 4, 5, 6, 7});
    CHECK(evt::k_from_fraction(s, 0.2) == 2);
    CHECK(evt::k_from_fraction(s, 0.9) == 6);
    CHECK(evt::k_from_fraction(s, 0.01) == 1);
    CHECK_THROWS_AS(evt::k_from_fraction(s, 0.0), ValidationError);
}
