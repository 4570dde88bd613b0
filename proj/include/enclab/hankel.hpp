#pragma once

#include "enclab/common.hpp"

namespace enclab {

/// Argument at which the Hankel evaluation switches from ascending series to the
/// large-argument expansion.
inline constexpr double kHankelSwitch = 12.0;

/// H0^(1)(x) = J0(x) + i Y0(x) for real x > 0.
cplx hankel0(double x);
/// H1^(1)(x) = J1(x) + i Y1(x) for real x > 0.
cplx hankel1(double x);

/// Ascending-series branch, exposed for testing near the switchover.
cplx hankel0_series(double x);
cplx hankel1_series(double x);
/// Large-argument branch, exposed for testing near the switchover.
cplx hankel0_asymptotic(double x);
cplx hankel1_asymptotic(double x);

/// 2D outgoing fundamental solution of the Helmholtz operator (Delta + k^2):
/// G(x, y) = (i/4) H0^(1)(k |x - y|).
cplx helmholtz_green(Vec2 x, Vec2 y, double k);
/// Gradient of helmholtz_green with respect to x.
CVec2 helmholtz_green_grad(Vec2 x, Vec2 y, double k);

}  // namespace enclab
