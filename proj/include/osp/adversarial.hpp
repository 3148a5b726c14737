#pragma once

#include "osp/core.hpp"
#include "osp/oracle.hpp"
#include "osp/optimize.hpp"
#include "osp/random.hpp"
#include "osp/statistics.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace osp {

/// Smooth bump exp(1 - 1/(1 - z^2)) on |z| < 1, zero elsewhere; phi(0) = 1.
Real mollifier(Real z);
/// d^r/dz^r of the mollifier for r = 0, 1, 2.
Real mollifier_derivative(Real z, int order);

/// Law of X_1 on [0,1]^2. An empty pdf means uniform; otherwise lower <= pdf <= upper.
struct Density {
  std::function<Real(Real, Real)> pdf;
  Real lower = 1.0;  // p_*
  Real upper = 1.0;  // p^*

  bool uniform() const { return !pdf; }
  Real operator()(Real x1, Real x2) const { return pdf ? pdf(x1, x2) : 1.0; }
};

/// Two-date instance with digital second payoff: P(G_2 = 1 | X_1 = x) = C_omega(x).
struct LowerBoundSpec {
  int m = 1;
  Real gamma = 1.0;
  Real alpha = 1.0;
  Real delta = 0.5;
  Real amp = 0.25;
  std::vector<int> omega;  // size m, entries in {0, 1}
  Density density;
  /// G_1 on [0,1]^2 with bounds G_- <= G_1 <= G_+; default 0.3 + 0.4 x_1.
  std::function<Real(Real, Real)> g1;
  Real g_lower = 0.3;
  Real g_upper = 0.7;

  void validate() const;
};

struct TwoDateSample {
  Eigen::Vector2d x1;
  int g2 = 0;
};

class LowerBoundInstance {
 public:
  /// Throws ParameterError naming the violated bound when C_omega would leave (0, 1).
  explicit LowerBoundInstance(LowerBoundSpec spec);

  const LowerBoundSpec& spec() const { return spec_; }
  int bumps() const { return spec_.m; }
  /// A m^{-gamma/alpha}: |G_1 - C_omega| on the strip.
  Real level() const { return level_; }
  /// delta m^{-gamma}: strip height and bump height.
  Real height() const { return height_; }

  /// phi_j(z) = delta m^{-gamma} phi(m z - (2j - 1)), j = 1..m.
  Real bump(int j, Real z) const;
  Real bump_derivative(int j, Real z, int order) const;
  /// Index j whose support (2j-2, 2j)/m contains z, or 0 when none does.
  int cell_of(Real z) const;

  Real boundary(Real z) const;  // b(z, omega)
  Real boundary_derivative(Real z, int order) const;
  Real boundary_with(const std::vector<int>& omega, Real z) const;

  Real g1(Real x1, Real x2) const;
  Real continuation(Real x1, Real x2) const;  // C_omega
  Real margin(Real x1, Real x2) const;        // Delta_omega = G_1 - C_omega
  /// Optimal rule: stop at date 1 iff 0 <= x_2 <= b(x_1).
  bool optimal_stop(Real x1, Real x2) const;

  /// P(0 <= X_1^2 <= delta m^{-gamma}).
  Real strip_probability() const { return strip_probability_; }
  /// P(0 <= X_1^2 <= phi_j(X_1^1)) for each bump; mass of the region a wrong bit flips.
  const std::vector<Real>& cell_mass() const { return cell_mass_; }
  /// Integral of C_omega against the density over the square.
  Real mean_continuation() const;

 private:
  LowerBoundSpec spec_;
  Real level_ = 0.0;
  Real height_ = 0.0;
  Real strip_probability_ = 0.0;
  std::vector<Real> cell_mass_;
};

/// X_1 from the density (rejection against p^* for non-uniform laws), G_2 ~ Bernoulli(C_omega(X_1)).
/// Sample i draws from the substream (seed, stream_id, i).
std::vector<TwoDateSample> sample(const LowerBoundInstance& instance, Index count, std::uint64_t seed,
                                  std::uint64_t stream_id = 0);

struct MarginRow {
  Real eta = 0.0;
  Real probability = 0.0;  // P(0 <= X^2 <= delta m^{-gamma}) 1{A m^{-gamma/alpha} <= eta}
  Real bound = 0.0;        // delta p^* A^{-alpha} eta^alpha
  bool holds = false;
};

inline constexpr Real margin_bound_rel_slack = 1e-12;

std::vector<MarginRow> margin_check(const LowerBoundInstance& instance, const std::vector<Real>& eta_grid);

/// Margin atoms of one instance as counted above: the strip at gap A m^{-gamma/alpha}.
std::vector<GapAtom> margin_atoms(const LowerBoundInstance& instance);

/// Probe across the family m in m_values: P_env(eta) = max_m P_m(|G_1 - C| < eta), fitted in log-log.
MarginProbe family_margin_probe(const LowerBoundSpec& base, const std::vector<int>& m_values,
                                const std::vector<Real>& eta_grid);

/// Exact regret E|Delta_omega| 1{rule != tau*} for a threshold rule stopping iff x_2 <= beta(x_1).
Real regret_boundary(const LowerBoundInstance& instance, const std::function<Real(Real)>& beta);
/// Regret of the threshold rule b(., omega_hat); sums the cell masses of the wrong bits.
Real regret_bits(const LowerBoundInstance& instance, const std::vector<int>& omega_hat);
/// Regret of any decision rule x -> {1, 2} (1 = stop), by 2-D quadrature split at x_2 = b(x_1).
Real regret(const LowerBoundInstance& instance, const std::function<int(Real, Real)>& rule);

enum class LearnerKind { plug_in, optimize };

/// Plug-in: omega_hat_j = 1 iff the mean of g2 - G_1 over samples under bump j is <= 0 (0 if none).
std::vector<int> plug_in_learner(const LowerBoundInstance& geometry, const std::vector<TwoDateSample>& samples);
/// Empirical-value maximizer over the bump-threshold family theta in [0,1]^m (bit j on iff theta_j > 1/2),
/// searched by optimize_regions.
std::vector<int> optimize_learner(const LowerBoundInstance& geometry, const std::vector<TwoDateSample>& samples,
                                  const OptimizerConfig& config);

struct LearningCurveSpec {
  Real gamma = 1.0;
  Real alpha = 1.0;
  Real delta = 0.5;
  Real amp = 0.25;
  Real q = 1.0;  // m = max(1, round(q M^{1/(gamma + 2 gamma/alpha + 1)}))
  std::vector<Index> M_grid;
  int replications = 100;
  int omega_count = 4;
  LearnerKind learner = LearnerKind::plug_in;
  OptimizerConfig optimizer{.grid_points_per_dim = 2, .refine_rounds = 0, .refine_top_k = 1, .box = std::nullopt};
  std::uint64_t seed = 0;

  void validate() const;
  int bumps_for(Index M) const;
};

struct LearningCurveRow {
  Index M = 0;
  int m = 0;
  Real mean_regret = 0.0;
  Real standard_error = 0.0;
};

struct LearningCurve {
  std::vector<LearningCurveRow> rows;
  LineFit<Real> fit;  // log(mean_regret) against log(M)
};

LearningCurve learning_curve(const LearningCurveSpec& spec);

/// max over sampled pairs of |b(y) - T_x b(y)| / |x - y|^gamma, with T_x the Taylor polynomial of
/// degree ceil(gamma) - 1 at x (at most 2).
Real holder_ratio(const LowerBoundInstance& instance, int pairs, std::uint64_t seed);

}  // namespace osp
