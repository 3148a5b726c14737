#pragma once

#include "osp/core.hpp"

#include <cmath>

namespace osp {

/// Sample standard deviation with the 1/(n-1) normalizer; 0 for a single observation.
template <typename Derived>
typename Derived::Scalar sample_stddev(const Eigen::DenseBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Index n = x.size();
  if (n < 2) return Scalar(0);
  const Scalar mean = x.mean();
  return std::sqrt((x.derived().array() - mean).square().sum() / Scalar(n - 1));
}

template <typename Scalar>
struct LineFit {
  Scalar slope = 0;
  Scalar intercept = 0;
  Scalar slope_stderr = 0;
};

/// Ordinary least squares y = intercept + slope * x.
template <typename DerivedX, typename DerivedY>
LineFit<typename DerivedX::Scalar> fit_line(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  const Index n = x.size();
  require(n >= 2 && y.size() == n, "fit_line: need at least two (x, y) pairs");
  const Scalar mx = x.mean();
  const Scalar my = y.mean();
  const auto dx = (x.array() - mx).eval();
  const Scalar sxx = dx.square().sum();
  require(sxx > 0, "fit_line: x values are all equal");
  LineFit<Scalar> fit;
  fit.slope = (dx * (y.array() - my)).sum() / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    const Scalar rss = (y.array() - fit.intercept - fit.slope * x.array()).square().sum();
    fit.slope_stderr = std::sqrt(rss / Scalar(n - 2) / sxx);
  }
  return fit;
}

/// Least-squares slope of log(y) against log(x); all entries must be positive.
template <typename DerivedX, typename DerivedY>
LineFit<typename DerivedX::Scalar> fit_loglog(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  require((x.array() > 0).all() && (y.array() > 0).all(), "fit_loglog: entries must be positive");
  return fit_line(x.array().log().matrix().eval(), y.array().log().matrix().eval());
}

}  // namespace osp
