#pragma once

#include "osp/core.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>

namespace osp {

/// Adaptive bisection over Gauss-Kronrod (7/15) panels with absolute tolerance `tol`.
/// Boost's own adaptive driver stops on a per-panel relative error, which never settles on the
/// flat tails of compactly supported integrands.
template <typename F>
Real integrate(const F& f, Real a, Real b, Real tol = 1e-10, int max_depth = 30) {
  if (a == b) return 0.0;
  Real error = 0.0;
  const Real whole = boost::math::quadrature::gauss_kronrod<Real, 15>::integrate(f, a, b, 0, 0.0, &error);
  // the reported |K - G| is on the reference interval [-1, 1]
  if (0.5 * std::abs(b - a) * error <= tol || max_depth <= 0) return whole;
  const Real mid = 0.5 * (a + b);
  return integrate(f, a, mid, 0.5 * tol, max_depth - 1) + integrate(f, mid, b, 0.5 * tol, max_depth - 1);
}

}  // namespace osp
