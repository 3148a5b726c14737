#pragma once

#include "osp/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace osp {

struct RateInputs {
  Real alpha = 1.0;
  Real rho = 1.0;
  Real gamma = 1.0;
  int dim = 2;
  int dates = 2;

  void validate() const {
    require(alpha > 0.0, "rates: alpha must be positive");
    require(rho > 0.0 && rho <= 1.0, "rates: rho must lie in (0, 1]");
    require(gamma > 0.0, "rates: gamma must be positive");
    require(dim >= 2 && dates >= 1, "rates: need dim >= 2 and dates >= 1");
  }
};

/// (1+alpha) / (2 + alpha (1 + rho)), for alpha > 0 and 0 < rho <= 1.
template <typename Scalar>
Scalar upper_rate_exponent(Scalar alpha, Scalar rho) {
  require(alpha > Scalar(0), "upper_rate_exponent: alpha must be positive");
  require(rho > Scalar(0) && rho <= Scalar(1), "upper_rate_exponent: rho must lie in (0, 1]");
  return (Scalar(1) + alpha) / (Scalar(2) + alpha * (Scalar(1) + rho));
}

/// (1+alpha) / (2 + alpha (1 + (d-1)/gamma)).
template <typename Scalar>
Scalar lower_rate_exponent(Scalar alpha, Scalar gamma, int dim) {
  require(alpha > Scalar(0), "lower_rate_exponent: alpha must be positive");
  require(gamma > Scalar(0), "lower_rate_exponent: gamma must be positive");
  require(dim >= 2, "lower_rate_exponent: dim must be >= 2");
  return (Scalar(1) + alpha) / (Scalar(2) + alpha * (Scalar(1) + Scalar(dim - 1) / gamma));
}

/// (2 + alpha (1 + rho)) / (2 (1 + alpha)); rho = 0 is the parametric limit.
template <typename Scalar>
Scalar budget_exponent(Scalar alpha, Scalar rho) {
  require(alpha > Scalar(0), "budget_exponent: alpha must be positive");
  require(rho >= Scalar(0) && rho <= Scalar(1), "budget_exponent: rho must lie in [0, 1]");
  return (Scalar(2) + alpha * (Scalar(1) + rho)) / (Scalar(2) * (Scalar(1) + alpha));
}

/// Optimization budget M = round(N^{budget exponent}), at least 1.
template <typename Scalar>
std::int64_t m_for_n(std::int64_t N, Scalar alpha, Scalar rho) {
  require(N >= 1, "m_for_n: N must be >= 1");
  using std::llround;
  using std::pow;
  return std::max<std::int64_t>(1, llround(pow(Scalar(N), budget_exponent(alpha, rho))));
}

/// rho = (K-1)(d-1)/gamma.
template <typename Scalar>
Scalar holder_entropy_exponent(Scalar gamma, int dim, int dates) {
  require(gamma > Scalar(0), "holder_entropy_exponent: gamma must be positive");
  require(dim >= 1 && dates >= 1, "holder_entropy_exponent: need dim >= 1 and dates >= 1");
  return Scalar(dates - 1) * Scalar(dim - 1) / gamma;
}

}  // namespace osp
