#pragma once

#include "osp/core.hpp"
#include "osp/process.hpp"
#include "osp/stopping.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace osp {

/// A finite chain together with its payoff table.
struct DiscreteInstance {
  DiscreteChainSpec chain;
  TablePayoff payoffs;

  int dates() const { return chain.dates; }
  int states() const { return chain.states; }
  void validate() const;
};

/// Exact Wald-Bellman solution. Row k-1 of V and C belongs to date k; the last row of C
/// repeats G_K so that ties-stop gives S*_K = E.
struct ValueTables {
  Eigen::MatrixXd V;
  Eigen::MatrixXd C;
  DiscreteRegion region_star;
};

ValueTables backward_induction(const DiscreteInstance& instance);

/// E[V*_1(X_1)] from the initial state.
Real optimal_value(const DiscreteInstance& instance, const ValueTables& tables);
Real optimal_value(const DiscreteInstance& instance);

/// E[G_tau(X_tau)] for the first entry time into `region`, by forward propagation of the
/// not-yet-stopped mass.
Real exact_region_value(const DiscreteInstance& instance, const DiscreteRegion& region);

/// Same quantity by backward policy evaluation W_k = 1_S G_k + 1_{S^c} P_{k+1} W_{k+1}.
/// For region_star this repeats the arithmetic of backward_induction operation by operation.
Real policy_value(const DiscreteInstance& instance, const DiscreteRegion& region);

struct RegionSearchResult {
  DiscreteRegion region;
  Real value = 0.0;
  std::uint64_t regions_searched = 0;
};

inline constexpr int max_search_bits = 24;

/// Best product region by enumeration of all 2^{|E|(K-1)} memberships. Values come from
/// policy_value; ties go to the lexicographically smallest membership sequence (date-major,
/// false < true). Throws SizeError above max_search_bits.
RegionSearchResult exhaustive_region_search(const DiscreteInstance& instance);

/// Both sides of V*_1 - E[G_tau(S)] = E sum_{l<K} |G_l - C_l| 1{X_l in S*_l sym-diff S_l, not stopped by S before l}.
struct BasicIdentityCheck {
  Real lhs = 0.0;
  Real rhs = 0.0;
  Real gap = 0.0;
};

BasicIdentityCheck lemma_bi_check(const DiscreteInstance& instance, const DiscreteRegion& region);

/// L2 distance of the stopped payoffs, sqrt(E (g_S - g_S')^2), computed exactly.
Real payoff_distance(const DiscreteInstance& instance, const DiscreteRegion& a, const DiscreteRegion& b);

/// Which Delta_X the inequality checks use.
///  set_algebra: sum_k P(X_k in (S_k sym-diff S'_k) \ (S'_k cap .. cap S'_{K-1})).
///  path_event:  sum_k P(X_k in S_k sym-diff S'_k, X_j notin S'_j for j < k).
enum class DistanceForm { set_algebra, path_event };

Real delta_x(const DiscreteInstance& instance, const DiscreteRegion& a, const DiscreteRegion& b, DistanceForm form);

/// max_k ||G_k||_inf.
Real payoff_bound(const DiscreteInstance& instance);

struct PayoffDistanceCheck {
  Real delta_g = 0.0;
  Real delta_x = 0.0;
  Real bound = 0.0;  // 2 A_G sqrt(2 Delta_X)
  bool holds = false;
};

inline constexpr Real inequality_slack = 1e-12;

PayoffDistanceCheck dfx_check(const DiscreteInstance& instance, const DiscreteRegion& a, const DiscreteRegion& b,
                              DistanceForm form);

/// Distribution of the margin |G_k - C_k| over k < K: atoms with their marginal mass.
struct GapAtom {
  Real gap = 0.0;
  Real mass = 0.0;
};
std::vector<GapAtom> gap_distribution(const DiscreteInstance& instance, const ValueTables& tables);

/// P(|G - C| < delta) summed over dates 1..K-1.
Real margin_mass(const std::vector<GapAtom>& atoms, Real delta, bool inclusive = false);

struct MarginProbe {
  std::vector<Real> delta_grid;
  std::vector<Real> probability;  // P(|G - C| < delta) per grid point
  Real alpha = 0.0;               // log-log slope over grid points with positive mass
  Real alpha_stderr = 0.0;
  Real delta0 = 0.0;
  /// sup_{0 < g <= delta0} P(|G - C| <= g) / g^alpha; absent when mass sits at gap 0 or alpha <= 0.
  std::optional<Real> A0;
};

/// Throws DegenerateFit when fewer than two grid points carry mass.
MarginProbe margin_probe(const std::vector<GapAtom>& atoms, const std::vector<Real>& delta_grid,
                         std::optional<Real> delta0 = std::nullopt);
MarginProbe margin_probe(const DiscreteInstance& instance, const std::vector<Real>& delta_grid,
                         std::optional<Real> delta0 = std::nullopt);

/// upsilon_alpha = A0^{-1/alpha} alpha (1+alpha)^{-1-1/alpha}; delta_alpha = A0 (alpha+1) delta0^alpha.
struct DdxConstants {
  Real alpha = 0.0;
  Real A0 = 0.0;
  Real delta0 = 0.0;
  Real upsilon = 0.0;
  Real delta_alpha = 0.0;
};
std::optional<DdxConstants> ddx_constants(const MarginProbe& probe);

struct DdxCheck {
  bool applicable = false;
  Real delta = 0.0;    // V* - V(S)
  Real delta_x = 0.0;  // Delta_X(S*, S)
  bool bad_in_range = false;
  Real bad_slack = 0.0;   // Delta - upsilon Delta_X^{(1+alpha)/alpha}
  Real bad1_slack = 0.0;  // rhs - Delta_X
  bool bad_holds = true;
  bool bad1_holds = true;
};

DdxCheck ddx_check(const DiscreteInstance& instance, const ValueTables& tables, const DiscreteRegion& region,
                   const MarginProbe& probe, DistanceForm form);

/// Random rows (normalized uniforms), payoffs U[0, 1], from the counter-based generator.
DiscreteInstance random_instance(int states, int dates, std::uint64_t seed, std::uint64_t index);
/// Bernoulli(1/2) membership at dates 1..K-1.
DiscreteRegion random_region(int states, int dates, std::uint64_t seed, std::uint64_t index);

}  // namespace osp
