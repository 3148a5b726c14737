#include "osp/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace osp {

bool ThetaBox::contains(const Theta& theta) const {
  return theta.size() == size() && (theta.array() >= lower.array()).all() && (theta.array() <= upper.array()).all();
}

void ThetaBox::validate() const {
  require(lower.size() == upper.size(), "theta box: bound sizes differ");
  require(lower.size() >= 1, "theta box: empty parameter space");
  require(lower.allFinite() && upper.allFinite(), "theta box: bounds must be finite");
  require((lower.array() <= upper.array()).all(), "theta box: empty (lower > upper)");
}

DiscreteRegion DiscreteRegion::full(int dates, int states) {
  return {Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(dates, states, true)};
}

DiscreteRegion DiscreteRegion::last_date_only(int dates, int states) {
  DiscreteRegion r{Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(dates, states, false)};
  r.member.row(dates - 1).setConstant(true);
  return r;
}

DiscreteRegion to_discrete_region(const TableFamily& family, const Theta& theta) {
  require(theta.size() == family.parameter_count(), "table family: theta has wrong size");
  DiscreteRegion r = DiscreteRegion::last_date_only(family.dates, family.states);
  for (int k = 1; k < family.dates; ++k) {
    for (int s = 0; s < family.states; ++s) r.member(k - 1, s) = theta(Index(k - 1) * family.states + s) > 0.5;
  }
  return r;
}

Theta to_theta(const DiscreteRegion& region) {
  Theta theta(Index(region.dates() - 1) * region.states());
  for (int k = 1; k < region.dates(); ++k) {
    for (int s = 0; s < region.states(); ++s) theta(Index(k - 1) * region.states() + s) = region.contains(k, s) ? 1.0 : 0.0;
  }
  return theta;
}

MaxCallFeatures max_call_features(const Eigen::Ref<const Eigen::VectorXd>& x, Real strike) {
  Real top = x(0);
  Real second = -std::numeric_limits<Real>::infinity();
  for (Index l = 1; l < x.size(); ++l) {
    if (x(l) > top) {
      second = top;
      top = x(l);
    } else if (x(l) > second) {
      second = x(l);
    }
  }
  return {std::max(top - strike, Real(0)), top - second};
}

bool region_contains(const RegionFamily& family, const Theta& theta, int k, int dates,
                     const Eigen::Ref<const Eigen::VectorXd>& x) {
  require(k >= 1 && k <= dates, "region_contains: date out of range");
  if (k == dates) return true;
  if (const auto* mc = std::get_if<MaxCallFamily>(&family)) {
    require(x.size() == mc->dim && mc->dim >= 2, "region_contains: state dimension does not match the max-call family");
    require(theta.size() == (mc->shared ? 2 : 2 * Index(dates - 1)), "region_contains: theta has wrong size");
    const Index offset = mc->shared ? 0 : 2 * Index(k - 1);
    const auto f = max_call_features(x, mc->strike);
    return f.itm > theta(offset) && f.spread > theta(offset + 1);
  }
  if (const auto* bf = std::get_if<BoundaryFamily>(&family)) {
    require(x.size() == 2, "region_contains: boundary family lives on [0,1]^2");
    return x(1) <= bf->boundary(x(0));
  }
  throw ParameterError("region_contains: table family needs a state index");
}

bool region_contains(const RegionFamily& family, const Theta& theta, int k, int dates, int state) {
  require(k >= 1 && k <= dates, "region_contains: date out of range");
  if (k == dates) return true;
  const auto* table = std::get_if<TableFamily>(&family);
  require(table != nullptr, "region_contains: only the table family acts on state indices");
  require(table->dates == dates && state >= 0 && state < table->states, "region_contains: state or dates mismatch");
  require(theta.size() == table->parameter_count(), "region_contains: theta has wrong size");
  return theta(Index(k - 1) * table->states + state) > 0.5;
}

Real MaxCallPayoff::operator()(int k, const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Real intrinsic = std::max(x.maxCoeff() - strike, Real(0));
  if (rate == 0.0) return intrinsic;
  return std::exp(-rate * horizon * k / dates) * intrinsic;
}

Eigen::MatrixXd payoff_matrix(const PayoffSpec& payoffs, const PathSet& paths) {
  const Index count = path_count(paths);
  if (const auto* gbm = std::get_if<GbmPaths>(&paths)) {
    const auto* mc = std::get_if<MaxCallPayoff>(&payoffs);
    require(mc != nullptr, "payoff_matrix: continuous paths need a max-call payoff");
    require(mc->dates == gbm->dates(), "payoff_matrix: payoff dates differ from path dates");
    Eigen::MatrixXd g(count, gbm->dates());
    for (Index m = 0; m < count; ++m) {
      for (int k = 1; k <= gbm->dates(); ++k) g(m, k - 1) = (*mc)(k, gbm->state(m, k));
    }
    return g;
  }
  const auto& dp = std::get<DiscretePaths>(paths);
  const auto* table = std::get_if<TablePayoff>(&payoffs);
  require(table != nullptr, "payoff_matrix: discrete paths need a table payoff");
  require(table->values.rows() == dp.dates() && table->values.cols() == dp.spec.states,
          "payoff_matrix: payoff table shape differs from the chain");
  Eigen::MatrixXd g(count, dp.dates());
  for (Index m = 0; m < count; ++m) {
    for (int k = 1; k <= dp.dates(); ++k) g(m, k - 1) = (*table)(k, dp.state(m, k));
  }
  return g;
}

namespace {

bool contains_on_path(const PathSet& paths, Index m, int k, const RegionFamily& family, const Theta& theta) {
  if (const auto* gbm = std::get_if<GbmPaths>(&paths)) {
    return region_contains(family, theta, k, gbm->dates(), gbm->state(m, k));
  }
  const auto& dp = std::get<DiscretePaths>(paths);
  return region_contains(family, theta, k, dp.dates(), dp.state(m, k));
}

Real payoff_on_path(const PathSet& paths, Index m, int k, const PayoffSpec& payoffs) {
  if (const auto* gbm = std::get_if<GbmPaths>(&paths)) return std::get<MaxCallPayoff>(payoffs)(k, gbm->state(m, k));
  return std::get<TablePayoff>(payoffs)(k, std::get<DiscretePaths>(paths).state(m, k));
}

}  // namespace

int first_entry_time(const PathSet& paths, Index m, const RegionFamily& family, const Theta& theta) {
  const int dates = std::visit([](const auto& p) { return p.dates(); }, paths);
  for (int k = 1; k < dates; ++k) {
    if (contains_on_path(paths, m, k, family, theta)) return k;
  }
  return dates;
}

int first_entry_time(const DiscreteRegion& region, const Eigen::Ref<const Eigen::VectorXi>& path) {
  require(path.size() == region.dates(), "first_entry_time: path length differs from region dates");
  for (int k = 1; k < region.dates(); ++k) {
    if (region.contains(k, path(k - 1))) return k;
  }
  return region.dates();
}

Real pathwise_payoff(const PathSet& paths, Index m, const RegionFamily& family, const Theta& theta,
                     const PayoffSpec& payoffs) {
  const int dates = std::visit([](const auto& p) { return p.dates(); }, paths);
  Real total = 0.0;
  Real not_yet = 1.0;  // 1{x_1 notin S_1, .., x_k notin S_k}
  for (int k = 1; k <= dates; ++k) {
    const Real inside = contains_on_path(paths, m, k, family, theta) ? 1.0 : 0.0;
    if (not_yet * inside != 0.0) total += payoff_on_path(paths, m, k, payoffs) * (not_yet * inside);
    not_yet *= 1.0 - inside;
  }
  return total;
}

Estimate pseudodistance_dX(const RegionFamily& family, const Theta& a, const Theta& b, const PathSet& paths) {
  const Index count = path_count(paths);
  const int dates = std::visit([](const auto& p) { return p.dates(); }, paths);
  Eigen::VectorXd hits(count);
  for (Index m = 0; m < count; ++m) {
    int h = 0;
    for (int k = 1; k <= dates; ++k) {
      h += contains_on_path(paths, m, k, family, a) != contains_on_path(paths, m, k, family, b) ? 1 : 0;
    }
    hits(m) = h;
  }
  const Real mean = hits.mean();
  const Real var = count > 1 ? (hits.array() - mean).square().sum() / Real(count - 1) : 0.0;
  return {mean, std::sqrt(var / Real(count))};
}

namespace {
void check_compatible(const DiscreteRegion& a, const DiscreteRegion& b, const DiscreteChainSpec& chain) {
  require(a.dates() == chain.dates && b.dates() == chain.dates, "pseudodistance: region dates differ from chain");
  require(a.states() == chain.states && b.states() == chain.states, "pseudodistance: region states differ from chain");
}
}  // namespace

Real pseudodistance_dX(const DiscreteRegion& a, const DiscreteRegion& b, const DiscreteChainSpec& chain) {
  check_compatible(a, b, chain);
  const Eigen::MatrixXd marginals = marginal_distributions(chain);
  Real total = 0.0;
  for (int k = 1; k <= chain.dates; ++k) {
    for (int s = 0; s < chain.states; ++s) {
      if (a.contains(k, s) != b.contains(k, s)) total += marginals(k - 1, s);
    }
  }
  return total;
}

Real pseudodistance_DeltaX(const DiscreteRegion& star, const DiscreteRegion& region, const DiscreteChainSpec& chain) {
  check_compatible(star, region, chain);
  const Eigen::MatrixXd marginals = marginal_distributions(chain);
  Real total = 0.0;
  for (int k = 1; k <= chain.dates; ++k) {
    for (int s = 0; s < chain.states; ++s) {
      if (star.contains(k, s) == region.contains(k, s)) continue;
      bool excluded = true;  // s in S'_k cap .. cap S'_{K-1}
      for (int l = k; l < chain.dates; ++l) excluded = excluded && region.contains(l, s);
      if (!excluded) total += marginals(k - 1, s);
    }
  }
  return total;
}

Real pseudodistance_DeltaX(const RegionFamily& family, const Theta& star, const Theta& theta, const ProcessSpec& process) {
  const auto* chain = std::get_if<DiscreteChainSpec>(&process);
  const auto* table = std::get_if<TableFamily>(&family);
  if (chain == nullptr || table == nullptr) {
    throw UnsupportedOperation("pseudodistance_DeltaX: exact set algebra needs a finite chain and a table family");
  }
  return pseudodistance_DeltaX(to_discrete_region(*table, star), to_discrete_region(*table, theta), *chain);
}

Real disagreement_distance(const DiscreteRegion& a, const DiscreteRegion& b, const DiscreteChainSpec& chain) {
  check_compatible(a, b, chain);
  chain.validate();
  Eigen::RowVectorXd alive = chain.transition(1).row(chain.initial);
  Real total = 0.0;
  for (int k = 1; k <= chain.dates; ++k) {
    for (int s = 0; s < chain.states; ++s) {
      if (a.contains(k, s) != b.contains(k, s)) total += alive(s);
      if (b.contains(k, s)) alive(s) = 0.0;
    }
    if (k < chain.dates) alive = alive * chain.transition(k + 1);
  }
  return total;
}

}  // namespace osp
