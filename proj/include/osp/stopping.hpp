#pragma once

#include "osp/core.hpp"
#include "osp/process.hpp"

#include <functional>
#include <variant>

namespace osp {

/// Compact parameter set: a coordinate box.
struct ThetaBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Index size() const { return lower.size(); }
  bool contains(const Theta& theta) const;
  void validate() const;
};

struct ThetaVector {
  Theta values;
  ThetaBox box;
};

/// Two-feature exercise regions for max-call options:
/// x in S_k(theta) iff (max_l x^l - strike)^+ > theta_1 and (top-two spread) > theta_2.
/// With `shared` the same theta serves every date; otherwise theta stacks one pair per date 1..K-1.
struct MaxCallFamily {
  Real strike = 100.0;
  int dim = 2;
  bool shared = true;
  int dates = 0;  // only read when !shared

  Index parameter_count() const { return shared ? 2 : 2 * Index(dates - 1); }
};

/// Every product region over a finite state space. theta_i in [0, 1], one coordinate per
/// (date k < K, state s) at index (k-1)*states + s; membership iff theta_i > 1/2.
struct TableFamily {
  int states = 0;
  int dates = 0;

  Index parameter_count() const { return Index(states) * (dates - 1); }
};

/// Two-date regions on [0,1]^2 below a boundary curve: S_1 = {x : x_2 <= boundary(x_1)}, S_2 = E.
struct BoundaryFamily {
  std::function<Real(Real)> boundary;
};

using RegionFamily = std::variant<MaxCallFamily, TableFamily, BoundaryFamily>;

/// Explicit per-date membership over {0..S-1}; row k-1 is S_k. The last row is always all true.
struct DiscreteRegion {
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> member;

  int dates() const { return int(member.rows()); }
  int states() const { return int(member.cols()); }
  bool contains(int k, int s) const { return member(k - 1, s); }

  /// Stop at the first date everywhere.
  static DiscreteRegion full(int dates, int states);
  /// Never stop before the last date.
  static DiscreteRegion last_date_only(int dates, int states);
};

DiscreteRegion to_discrete_region(const TableFamily& family, const Theta& theta);
Theta to_theta(const DiscreteRegion& region);

/// Region features of a basket state: in-the-money amount (max_l x^l - strike)^+ and the gap
/// between the two largest coordinates (|x^1 - x^2| for two assets).
struct MaxCallFeatures {
  Real itm;
  Real spread;
};
MaxCallFeatures max_call_features(const Eigen::Ref<const Eigen::VectorXd>& x, Real strike);

bool region_contains(const RegionFamily& family, const Theta& theta, int k, int dates,
                     const Eigen::Ref<const Eigen::VectorXd>& x);
bool region_contains(const RegionFamily& family, const Theta& theta, int k, int dates, int state);

/// G_k(x) = exp(-rate t_k) (max_l x^l - strike)^+ ; rate = 0 gives the undiscounted payoff.
struct MaxCallPayoff {
  Real strike = 100.0;
  Real rate = 0.0;
  Real horizon = 1.0;
  int dates = 1;

  Real operator()(int k, const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

/// G[k-1][s] for a finite chain.
struct TablePayoff {
  Eigen::MatrixXd values;  // dates x states

  Real operator()(int k, int s) const { return values(k - 1, s); }
};

using PayoffSpec = std::variant<MaxCallPayoff, TablePayoff>;

/// G_k(X^{(m)}_k) for every path and date (count x dates).
Eigen::MatrixXd payoff_matrix(const PayoffSpec& payoffs, const PathSet& paths);

/// min{1 <= l <= K : X_l in S_l}; always defined because S_K = E.
int first_entry_time(const PathSet& paths, Index m, const RegionFamily& family, const Theta& theta);
int first_entry_time(const DiscreteRegion& region, const Eigen::Ref<const Eigen::VectorXi>& path);

/// g_S(x_1..x_K) = sum_k G_{k+1}(x_{k+1}) 1{x_1 notin S_1, .., x_k notin S_k, x_{k+1} in S_{k+1}},
/// evaluated as the explicit indicator sum.
Real pathwise_payoff(const PathSet& paths, Index m, const RegionFamily& family, const Theta& theta,
                     const PayoffSpec& payoffs);

/// Monte Carlo estimate with its standard error.
struct Estimate {
  Real value = 0.0;
  Real standard_error = 0.0;
};

/// d_X(A, B) = sum_k P(X_k in A_k sym-diff B_k), estimated on a path batch.
Estimate pseudodistance_dX(const RegionFamily& family, const Theta& a, const Theta& b, const PathSet& paths);
/// Exact d_X on a finite chain from the propagated marginals.
Real pseudodistance_dX(const DiscreteRegion& a, const DiscreteRegion& b, const DiscreteChainSpec& chain);

/// Delta_X(S, S') = sum_k P(X_k in (S_k sym-diff S'_k) \ (S'_k cap .. cap S'_{K-1})), the set-algebra
/// form; exact on finite chains.
Real pseudodistance_DeltaX(const DiscreteRegion& star, const DiscreteRegion& region, const DiscreteChainSpec& chain);
/// Throws UnsupportedOperation for continuous processes.
Real pseudodistance_DeltaX(const RegionFamily& family, const Theta& star, const Theta& theta, const ProcessSpec& process);

/// Path-event form: sum_k P(X_k in S_k sym-diff S'_k and X_j notin S'_j for all j < k),
/// i.e. disagreement at a date the second region has not yet stopped at. This is the weight
/// that the first-disagreement recursion of the stopped payoffs produces.
Real disagreement_distance(const DiscreteRegion& a, const DiscreteRegion& b, const DiscreteChainSpec& chain);

}  // namespace osp
