#pragma once

// One-step-ahead conditional VaR:  q_tau(X_{t+1} | F_t) = mu_{t+1} + sigma_{t+1} q_tau(Z).

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "garch_ugh/error.hpp"
#include "garch_ugh/evt.hpp"
#include "garch_ugh/garch.hpp"

namespace garch_ugh::var {

enum class Method { GarchUgh, GarchEvt, Ugh };

inline std::string_view to_string(Method m) {
    switch (m) {
        case Method::GarchUgh: return "garch_ugh";
        case Method::GarchEvt: return "garch_evt";
        case Method::Ugh: return "ugh";
    }
    return "?";
}

inline std::optional<Method> parse_method(std::string_view s) {
    if (s == "garch_ugh") return Method::GarchUgh;
    if (s == "garch_evt") return Method::GarchEvt;
    if (s == "ugh") return Method::Ugh;
    return std::nullopt;
}

inline std::string_view display_name(Method m) {
    switch (m) {
        case Method::GarchUgh: return "GARCH-UGH";
        case Method::GarchEvt: return "GARCH-EVT";
        case Method::Ugh: return "UGH";
    }
    return "?";
}

struct VaRForecast {
    std::size_t t_index = 0;  // index of the forecast target in the series
    double tau = 0.0;
    double value = 0.0;
    Method method = Method::GarchUgh;
    double k_fraction = 0.0;
    std::size_t k = 0;
    double rho_used = -1.0;  // NaN for the GPD method
    bool rho_fallback = false;
    // Decomposition parts; mu = 0, sigma = 1 for the unfiltered method.
    double mu = 0.0;
    double sigma = 1.0;
    double z_quantile = 0.0;
};

inline void check_tau(double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("tau must lie in (0,1)");
}

/// Quantile q_{1-p} of the sample by the bias-corrected UGH recipe. `kr` is the
/// sample's k_rho selection; `rho_override` replaces its rho (e.g. -1).
struct UghQuantile {
    double value = 0.0;
    evt::TailEstimate tail;
};

inline UghQuantile ugh_sample_quantile(const evt::OrderedSample& s, const evt::KRho& kr,
                                       double k_fraction, double p,
                                       std::optional<double> rho_override = std::nullopt) {
    evt::KRho used = kr;
    if (rho_override) {
        used.rho_hat = *rho_override;
        used.fallback = false;
    }
    const std::size_t k = evt::k_from_fraction(s, k_fraction);
    UghQuantile out;
    out.tail = evt::tail_estimate(s, k, used);
    out.value = evt::ugh_quantile(out.tail, p, s.n());
    return out;
}

inline VaRForecast compose(const garch::GarchFit& fit, double z_quantile) {
    VaRForecast f;
    f.mu = fit.mu_next;
    f.sigma = fit.sigma_next;
    f.z_quantile = z_quantile;
    f.value = fit.mu_next + fit.sigma_next * z_quantile;
    return f;
}

inline VaRForecast forecast_garch_ugh_from_fit(const garch::GarchFit& fit, double tau,
                                               double k_fraction,
                                               std::optional<double> rho_override = std::nullopt) {
    check_tau(tau);
    const evt::OrderedSample s(fit.residuals);
    const evt::KRho kr = rho_override ? evt::KRho{} : evt::select_k_rho(s);
    const auto q = ugh_sample_quantile(s, kr, k_fraction, 1.0 - tau, rho_override);
    VaRForecast f = compose(fit, q.value);
    f.tau = tau;
    f.method = Method::GarchUgh;
    f.k_fraction = k_fraction;
    f.k = q.tail.k;
    f.rho_used = q.tail.rho_hat;
    f.rho_fallback = q.tail.rho_fallback_used;
    f.t_index = fit.residuals.size();
    return f;
}

inline VaRForecast forecast_garch_evt_from_fit(const garch::GarchFit& fit, double tau,
                                               double k_fraction) {
    check_tau(tau);
    const evt::OrderedSample s(fit.residuals);
    const std::size_t k = evt::k_from_fraction(s, k_fraction);
    const auto gpd = evt::gpd_fit(s, k);
    VaRForecast f = compose(fit, evt::gpd_quantile(gpd, 1.0 - tau, s.n()));
    f.tau = tau;
    f.method = Method::GarchEvt;
    f.k_fraction = k_fraction;
    f.k = k;
    f.rho_used = std::nan("");
    f.t_index = fit.residuals.size();
    return f;
}

inline VaRForecast forecast_garch_ugh(std::span<const double> window, double tau, double k_fraction,
                                      std::optional<double> rho_override = std::nullopt) {
    check_tau(tau);
    return forecast_garch_ugh_from_fit(garch::fit_qmle(window), tau, k_fraction, rho_override);
}

inline VaRForecast forecast_garch_evt(std::span<const double> window, double tau, double k_fraction) {
    check_tau(tau);
    return forecast_garch_evt_from_fit(garch::fit_qmle(window), tau, k_fraction);
}

inline VaRForecast forecast_ugh_unfiltered(std::span<const double> window, double tau,
                                           double k_fraction,
                                           std::optional<double> rho_override = std::nullopt) {
    check_tau(tau);
    const evt::OrderedSample s(window);
    const evt::KRho kr = rho_override ? evt::KRho{} : evt::select_k_rho(s);
    const auto q = ugh_sample_quantile(s, kr, k_fraction, 1.0 - tau, rho_override);
    VaRForecast f;
    f.tau = tau;
    f.value = q.value;
    f.z_quantile = q.value;
    f.method = Method::Ugh;
    f.k_fraction = k_fraction;
    f.k = q.tail.k;
    f.rho_used = q.tail.rho_hat;
    f.rho_fallback = q.tail.rho_fallback_used;
    f.t_index = window.size();
    return f;
}

}  // namespace garch_ugh::var
