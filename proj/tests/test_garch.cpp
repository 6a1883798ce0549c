#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <random>

#include "garch_ugh/garch.hpp"
#include "oracles.hpp"

using namespace garch_ugh;
using Catch::Approx;

namespace {
const garch::GarchParams kTrue{0.05, 1e-6, 0.08, 0.90};

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }
double sd_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / (v.size() - 1));
}
}  // namespace

TEST_CASE("constant-volatility limit") {
    const std::vector<double> x{0.01, -0.02, 0.005, 0.03, -0.01};
    const garch::GarchParams p{0.0, 4e-4, 1e-300, 1e-300};
    const auto path = garch::garch_recursion(x, p, {0.0, 4e-4, 0.0});
    for (std::size_t t = 0; t < x.size(); ++t) {
        CHECK(path.sigma[t] * path.sigma[t] == Approx(4e-4).epsilon(1e-12));
        CHECK(path.residuals[t] == Approx(x[t] / 0.02).epsilon(1e-12));
    }
}

TEST_CASE("zero returns drive the variance to its fixed point") {
    const std::vector<double> x(400, 0.0);
    const garch::GarchParams p{0.0, 2e-6, 0.1, 0.8};
    const auto path = garch::garch_recursion(x, p, {0.0, 1e-3, 0.0});
    const double fixed = 2e-6 / (1.0 - 0.8);
    CHECK(path.sigma.back() * path.sigma.back() == Approx(fixed).epsilon(1e-12));
    // geometric approach: the gap shrinks by kappa2 each step
    const double g1 = path.sigma[10] * path.sigma[10] - fixed;
    const double g2 = path.sigma[11] * path.sigma[11] - fixed;
    CHECK(g2 / g1 == Approx(0.8).epsilon(1e-9));
}

TEST_CASE("recursion replays the simulator") {
    const auto sim = garch::simulate_path(kTrue, 2000, 500, 42);
    const auto path = garch::garch_recursion(sim.x, kTrue, sim.init);
    double expected = 0.0;
    for (std::size_t t = 0; t < sim.x.size(); ++t) {
        expected += 2.0 * std::log(sim.sigma[t]) + sim.z[t] * sim.z[t];
        CHECK(path.mu[t] == Approx(sim.mu[t]).epsilon(1e-12));
        CHECK(path.sigma[t] == Approx(sim.sigma[t]).epsilon(1e-12));
    }
    CHECK(path.neg_loglik == Approx(expected).epsilon(1e-10));
    CHECK(garch::neg_loglik(sim.x, kTrue, sim.init) == Approx(expected).epsilon(1e-10));
}

TEST_CASE("recursion rejects bad parameters") {
    const std::vector<double> x{0.1, 0.2, 0.3};
    CHECK_THROWS_AS(garch::garch_recursion(x, {0.0, 0.0, 0.1, 0.8}, {0.0, 1.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(garch::garch_recursion(std::vector<double>{0.1}, kTrue, {0.0, 1.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(garch::garch_recursion(x, {0.0, 1e300, 1e300, 1e300}, {1e300, 1e300, 0.0}),
                    ComputationError);
}

TEST_CASE("simulate basics") {
    const auto one = garch::simulate(kTrue, 1, 10, 5);
    REQUIRE(one.size() == 1);
    CHECK(std::isfinite(one[0]));
    CHECK(garch::simulate(kTrue, 500, 100, 9) == garch::simulate(kTrue, 500, 100, 9));
    CHECK(garch::simulate(kTrue, 500, 100, 9) != garch::simulate(kTrue, 500, 100, 10));
    CHECK_THROWS_AS(garch::simulate({0.0, 1e-6, 0.2, 0.85}, 10, 10, 1), ValidationError);
    CHECK_THROWS_AS(garch::simulate(kTrue, 0, 10, 1), ValidationError);
}

TEST_CASE("simulated variance matches the unconditional variance") {
    const garch::GarchParams p{0.0, 1e-5, 0.05, 0.90};
    const auto x = garch::simulate(p, 100000, 1000, 123);
    const double v = sd_of(x) * sd_of(x);
    CHECK(std::abs(v / p.unconditional_variance() - 1.0) < 0.05);
}

TEST_CASE("Student innovations have unit variance") {
    std::mt19937_64 rng(1);
    garch::StudentInnovations z(5.0);
    std::vector<double> v(200000);
    for (auto& x : v) x = z(rng);
    CHECK(sd_of(v) == Approx(1.0).margin(0.03));
}

TEST_CASE("QMLE recovers simulated parameters") {
    const auto x = garch::simulate(kTrue, 4000, 1000, 2024);
    const auto fit = garch::fit_qmle(x);
    CHECK(std::abs(fit.params.phi - kTrue.phi) < 0.05);
    CHECK(std::abs(fit.params.kappa1 - kTrue.kappa1) < 0.05);
    CHECK(std::abs(fit.params.kappa2 - kTrue.kappa2) < 0.05);
    CHECK(fit.params.kappa0 / kTrue.kappa0 > 0.5);
    CHECK(fit.params.kappa0 / kTrue.kappa0 < 2.0);
    CHECK(fit.stationary);

    CHECK(std::abs(mean_of(fit.residuals)) < 0.1);
    CHECK(std::abs(sd_of(fit.residuals) - 1.0) < 0.1);

    for (std::size_t t = 0; t < x.size(); ++t) {
        REQUIRE(fit.sigma[t] > 0.0);
        CHECK(std::abs(fit.mu[t] + fit.sigma[t] * fit.residuals[t] - x[t]) <= 1e-12);
    }

    const auto init = garch::default_init(x);
    const garch::GarchParams start{0.0, 0.05 * init.sigma_sq, 0.05, 0.90};
    CHECK(fit.neg_loglik <= garch::neg_loglik(x, start, init));

    const double eps = x.back() - fit.mu.back();
    CHECK(fit.mu_next == Approx(fit.params.phi * x.back()).epsilon(1e-14));
    CHECK(fit.sigma_next * fit.sigma_next ==
          Approx(fit.params.kappa0 + fit.params.kappa1 * eps * eps +
                 fit.params.kappa2 * fit.sigma.back() * fit.sigma.back())
              .epsilon(1e-12));
}

TEST_CASE("QMLE is scale equivariant") {
    const auto x = garch::simulate(kTrue, 1500, 500, 77);
    std::vector<double> y(x);
    const double c = 25.0;
    for (auto& v : y) v *= c;
    const auto a = garch::fit_qmle(x);
    const auto b = garch::fit_qmle(y);
    CHECK(std::abs(a.params.phi - b.params.phi) < 1e-3);
    CHECK(std::abs(a.params.kappa1 - b.params.kappa1) < 1e-3);
    CHECK(std::abs(a.params.kappa2 - b.params.kappa2) < 1e-3);
    CHECK(b.params.kappa0 / (c * c * a.params.kappa0) == Approx(1.0).margin(0.02));
    double max_diff = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) max_diff = std::max(max_diff, std::abs(a.residuals[t] - b.residuals[t]));
    CHECK(max_diff < 1e-2);
}

TEST_CASE("fit_qmle input checks") {
    CHECK_THROWS_AS(garch::fit_qmle(std::vector<double>(99, 0.01)), ValidationError);
    CHECK_THROWS_AS(garch::fit_qmle(std::vector<double>(200, 0.01)), ComputationError);
    std::vector<double> bad = garch::simulate(kTrue, 200, 100, 1);
    bad[50] = std::nan("");
    CHECK_THROWS_AS(garch::fit_qmle(bad), ValidationError);
}
