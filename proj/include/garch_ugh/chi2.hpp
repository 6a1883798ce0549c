#pragma once

#include <boost/math/special_functions/gamma.hpp>

#include "garch_ugh/error.hpp"

namespace garch_ugh::backtest {

/// Upper-tail probability P(X > x) of a chi-square variable with `df` degrees
/// of freedom, via the regularized upper incomplete gamma Q(df/2, x/2).
inline double chi2_sf(double x, int df) {
    if (df < 1) throw ValidationError("chi2_sf: df must be >= 1");
    if (!(x >= 0.0)) throw ValidationError("chi2_sf: x must be >= 0");
    if (x == 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

}  // namespace garch_ugh::backtest
