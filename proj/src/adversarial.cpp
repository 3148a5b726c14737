#include "osp/adversarial.hpp"

#include "osp/parallel.hpp"
#include "osp/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace osp {

namespace {

constexpr Real quadrature_tol = 1e-10;

// Segment ends 0, 2/m, 4/m, .., 1: the integrands are smooth between consecutive ends.
std::vector<Real> cell_edges(int m) {
  std::vector<Real> edges{0.0};
  for (int j = 1; 2.0 * j / m < 1.0; ++j) edges.push_back(2.0 * j / m);
  edges.push_back(1.0);
  return edges;
}

template <typename F>
Real integrate_cells(int m, const F& f, Real tol) {
  const auto edges = cell_edges(m);
  Real total = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) total += integrate(f, edges[i], edges[i + 1], tol);
  return total;
}

// Mass of the density on {x_1} x [lo, hi].
Real column_mass(const Density& density, Real x1, Real lo, Real hi) {
  if (hi <= lo) return 0.0;
  if (density.uniform()) return hi - lo;
  return integrate([&](Real x2) { return density(x1, x2); }, lo, hi, quadrature_tol);
}

}  // namespace

Real mollifier(Real z) {
  const Real u = 1.0 - z * z;
  if (u <= 0.0) return 0.0;
  return std::exp(1.0 - 1.0 / u);
}

Real mollifier_derivative(Real z, int order) {
  require(order >= 0 && order <= 2, "mollifier_derivative: order must be 0, 1 or 2");
  const Real u = 1.0 - z * z;
  if (u <= 0.0) return 0.0;
  const Real phi = std::exp(1.0 - 1.0 / u);
  if (order == 0) return phi;
  const Real h1 = -2.0 * z / (u * u);
  if (order == 1) return phi * h1;
  const Real h2 = -2.0 / (u * u) - 8.0 * z * z / (u * u * u);
  return phi * (h1 * h1 + h2);
}

void LowerBoundSpec::validate() const {
  require(m >= 1, "lower bound: m must be >= 1");
  require(gamma > 0.0 && alpha > 0.0, "lower bound: gamma and alpha must be positive");
  require(delta > 0.0 && delta < 1.0, "lower bound: delta must lie in (0, 1)");
  require(amp > 0.0, "lower bound: amp must be positive");
  require(omega.size() == static_cast<std::size_t>(m), "lower bound: omega must have m entries");
  for (int w : omega) require(w == 0 || w == 1, "lower bound: omega entries must be 0 or 1");
  require(density.lower > 0.0 && density.lower <= density.upper, "lower bound: need 0 < p_* <= p^*");
  require(g_lower > 0.0 && g_lower <= g_upper && g_upper < 1.0, "lower bound: need 0 < G_- <= G_+ < 1");
}

LowerBoundInstance::LowerBoundInstance(LowerBoundSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  level_ = spec_.amp * std::pow(Real(spec_.m), -spec_.gamma / spec_.alpha);
  height_ = spec_.delta * std::pow(Real(spec_.m), -spec_.gamma);
  if (!(spec_.g_lower - level_ > 0.0)) {
    throw ParameterError("lower bound: amp too large, G_- - A m^{-gamma/alpha} = " +
                         std::to_string(spec_.g_lower - level_) + " is not positive");
  }
  if (!(spec_.g_upper + level_ < 1.0)) {
    throw ParameterError("lower bound: amp too large, G_+ + A m^{-gamma/alpha} = " +
                         std::to_string(spec_.g_upper + level_) + " is not below 1");
  }
  strip_probability_ = spec_.density.uniform()
                           ? height_
                           : integrate_cells(spec_.m, [&](Real x1) { return column_mass(spec_.density, x1, 0.0, height_); },
                                             quadrature_tol);
  cell_mass_.assign(static_cast<std::size_t>(spec_.m), 0.0);
  for (int j = 1; j <= spec_.m; ++j) {
    const Real lo = std::max(Real(0), Real(2 * j - 2) / spec_.m);
    const Real hi = std::min(Real(1), Real(2 * j) / spec_.m);
    if (lo >= hi) continue;
    cell_mass_[static_cast<std::size_t>(j - 1)] =
        integrate([&](Real x1) { return column_mass(spec_.density, x1, 0.0, bump(j, x1)); }, lo, hi, quadrature_tol);
  }
}

Real LowerBoundInstance::bump(int j, Real z) const { return height_ * mollifier(spec_.m * z - (2 * j - 1)); }

Real LowerBoundInstance::bump_derivative(int j, Real z, int order) const {
  return height_ * std::pow(Real(spec_.m), order) * mollifier_derivative(spec_.m * z - (2 * j - 1), order);
}

int LowerBoundInstance::cell_of(Real z) const {
  if (z < 0.0) return 0;
  const int j = int(std::floor(spec_.m * z / 2.0)) + 1;
  return j <= spec_.m ? j : 0;
}

Real LowerBoundInstance::boundary_with(const std::vector<int>& omega, Real z) const {
  const int j = cell_of(z);
  return j > 0 && omega[static_cast<std::size_t>(j - 1)] == 1 ? bump(j, z) : 0.0;
}

Real LowerBoundInstance::boundary(Real z) const { return boundary_with(spec_.omega, z); }

Real LowerBoundInstance::boundary_derivative(Real z, int order) const {
  const int j = cell_of(z);
  return j > 0 && spec_.omega[static_cast<std::size_t>(j - 1)] == 1 ? bump_derivative(j, z, order) : 0.0;
}

Real LowerBoundInstance::g1(Real x1, Real x2) const { return spec_.g1 ? spec_.g1(x1, x2) : 0.3 + 0.4 * x1; }

Real LowerBoundInstance::continuation(Real x1, Real x2) const {
  const Real b = boundary(x1);
  Real c = g1(x1, x2);
  if (0.0 <= x2 && x2 <= b) c -= level_;
  if (b < x2 && x2 <= height_) c += level_;
  return c;
}

Real LowerBoundInstance::margin(Real x1, Real x2) const { return g1(x1, x2) - continuation(x1, x2); }

bool LowerBoundInstance::optimal_stop(Real x1, Real x2) const { return 0.0 <= x2 && x2 <= boundary(x1); }

Real LowerBoundInstance::mean_continuation() const {
  const Density& p = spec_.density;
  auto column = [&](Real x1) {
    const Real b = boundary(x1);
    const Real base = integrate([&](Real x2) { return g1(x1, x2) * p(x1, x2); }, 0.0, 1.0, quadrature_tol);
    return base + level_ * (column_mass(p, x1, b, height_) - column_mass(p, x1, 0.0, b));
  };
  return integrate_cells(spec_.m, column, quadrature_tol);
}

std::vector<TwoDateSample> sample(const LowerBoundInstance& instance, Index count, std::uint64_t seed,
                                  std::uint64_t stream_id) {
  require(count >= 0, "sample: negative count");
  const Density& density = instance.spec().density;
  std::vector<TwoDateSample> out(static_cast<std::size_t>(count));
  parallel_for(out.size(), [&](std::size_t i) {
    SubstreamRng rng({seed, stream_id}, static_cast<std::uint32_t>(i));
    auto& s = out[i];
    for (;;) {
      s.x1 = {rng.uniform(), rng.uniform()};
      if (density.uniform() || rng.uniform() * density.upper <= density(s.x1(0), s.x1(1))) break;
    }
    s.g2 = rng.uniform() <= instance.continuation(s.x1(0), s.x1(1)) ? 1 : 0;
  });
  return out;
}

std::vector<MarginRow> margin_check(const LowerBoundInstance& instance, const std::vector<Real>& eta_grid) {
  const auto& spec = instance.spec();
  std::vector<MarginRow> rows;
  for (Real eta : eta_grid) {
    require(eta > 0.0, "margin_check: eta must be positive");
    MarginRow row;
    row.eta = eta;
    row.probability = instance.level() <= eta ? instance.strip_probability() : 0.0;
    row.bound = spec.delta * spec.density.upper * std::pow(spec.amp, -spec.alpha) * std::pow(eta, spec.alpha);
    row.holds = row.probability <= row.bound * (1.0 + margin_bound_rel_slack);
    rows.push_back(row);
  }
  return rows;
}

std::vector<GapAtom> margin_atoms(const LowerBoundInstance& instance) {
  return {{instance.level(), instance.strip_probability()}};
}

MarginProbe family_margin_probe(const LowerBoundSpec& base, const std::vector<int>& m_values,
                                const std::vector<Real>& eta_grid) {
  require(!m_values.empty() && !eta_grid.empty(), "family_margin_probe: empty m or eta grid");
  std::vector<GapAtom> atoms;
  for (int m : m_values) {
    LowerBoundSpec spec = base;
    spec.m = m;
    spec.omega.assign(static_cast<std::size_t>(m), 0);
    const auto a = margin_atoms(LowerBoundInstance(spec));
    atoms.insert(atoms.end(), a.begin(), a.end());
  }
  auto envelope = [&](Real eta, bool inclusive) {
    Real best = 0.0;
    for (const auto& a : atoms) {
      if (a.gap < eta || (inclusive && a.gap == eta)) best = std::max(best, a.mass);
    }
    return best;
  };
  MarginProbe probe;
  probe.delta_grid = eta_grid;
  std::vector<Real> xs;
  std::vector<Real> ys;
  for (Real eta : eta_grid) {
    const Real p = envelope(eta, false);
    probe.probability.push_back(p);
    if (p > 0.0) {
      xs.push_back(eta);
      ys.push_back(p);
    }
  }
  if (xs.size() < 2) throw DegenerateFit("family_margin_probe: fewer than two grid points carry mass");
  const auto fit = fit_loglog(Eigen::Map<const Eigen::VectorXd>(xs.data(), Index(xs.size())),
                              Eigen::Map<const Eigen::VectorXd>(ys.data(), Index(ys.size())));
  probe.alpha = fit.slope;
  probe.alpha_stderr = fit.slope_stderr;
  probe.delta0 = std::min(0.49, *std::max_element(eta_grid.begin(), eta_grid.end()));
  if (probe.alpha > 0.0) {
    Real sup = 0.0;
    for (const auto& a : atoms) {
      if (a.gap <= probe.delta0) sup = std::max(sup, envelope(a.gap, true) / std::pow(a.gap, probe.alpha));
    }
    probe.A0 = sup;
  }
  return probe;
}

Real regret_boundary(const LowerBoundInstance& instance, const std::function<Real(Real)>& beta) {
  const Density& p = instance.spec().density;
  const Real h = instance.height();
  auto column = [&](Real x1) {
    const Real b = instance.boundary(x1);
    const Real t = std::clamp(beta(x1), Real(0), h);
    return column_mass(p, x1, std::min(b, t), std::max(b, t));
  };
  return instance.level() * integrate_cells(instance.bumps(), column, quadrature_tol);
}

Real regret_bits(const LowerBoundInstance& instance, const std::vector<int>& omega_hat) {
  require(omega_hat.size() == instance.spec().omega.size(), "regret_bits: omega_hat has wrong size");
  Real total = 0.0;
  for (std::size_t j = 0; j < omega_hat.size(); ++j) {
    if (omega_hat[j] != instance.spec().omega[j]) total += instance.cell_mass()[j];
  }
  return instance.level() * total;
}

Real regret(const LowerBoundInstance& instance, const std::function<int(Real, Real)>& rule) {
  const Density& p = instance.spec().density;
  const Real h = instance.height();
  constexpr Real inner_tol = 1e-9;
  auto column = [&](Real x1) {
    const Real b = instance.boundary(x1);
    const Real wrong_stop =
        integrate([&](Real x2) { return rule(x1, x2) != 1 ? p(x1, x2) : 0.0; }, 0.0, b, inner_tol);
    const Real wrong_continue =
        integrate([&](Real x2) { return rule(x1, x2) != 2 ? p(x1, x2) : 0.0; }, b, h, inner_tol);
    return wrong_stop + wrong_continue;
  };
  return instance.level() * integrate_cells(instance.bumps(), column, 1e-8);
}

namespace {

// Bump index j >= 1 when the sample lies in {0 <= x_2 <= phi_j(x_1)}, else 0.
int bump_area(const LowerBoundInstance& geometry, const TwoDateSample& s) {
  const int j = geometry.cell_of(s.x1(0));
  return j > 0 && s.x1(1) <= geometry.bump(j, s.x1(0)) ? j : 0;
}

}  // namespace

std::vector<int> plug_in_learner(const LowerBoundInstance& geometry, const std::vector<TwoDateSample>& samples) {
  const auto m = static_cast<std::size_t>(geometry.bumps());
  std::vector<Real> sum(m, 0.0);
  std::vector<Index> count(m, 0);
  for (const auto& s : samples) {
    const int j = bump_area(geometry, s);
    if (j == 0) continue;
    sum[std::size_t(j - 1)] += s.g2 - geometry.g1(s.x1(0), s.x1(1));
    ++count[std::size_t(j - 1)];
  }
  std::vector<int> omega(m, 0);
  for (std::size_t j = 0; j < m; ++j) omega[j] = count[j] > 0 && sum[j] <= 0.0 ? 1 : 0;
  return omega;
}

std::vector<int> optimize_learner(const LowerBoundInstance& geometry, const std::vector<TwoDateSample>& samples,
                                  const OptimizerConfig& config) {
  require(!samples.empty(), "optimize_learner: no samples");
  const int m = geometry.bumps();
  const Real M = Real(samples.size());
  // Empirical value of the rule with bits theta: mean g2 plus the gain G_1 - g2 of every sample it stops.
  Real base = 0.0;
  Eigen::VectorXd gain = Eigen::VectorXd::Zero(m);
  for (const auto& s : samples) {
    base += s.g2;
    const int j = bump_area(geometry, s);
    if (j > 0) gain(j - 1) += geometry.g1(s.x1(0), s.x1(1)) - s.g2;
  }
  base /= M;
  gain /= M;
  const Objective objective = [&](const Theta& theta) {
    Real v = base;
    for (Index j = 0; j < m; ++j) {
      if (theta(j) > 0.5) v += gain(j);
    }
    return v;
  };
  const ThetaBox box{Eigen::VectorXd::Zero(m), Eigen::VectorXd::Ones(m)};
  const OptimizeResult result = optimize_regions(objective, box, config);
  std::vector<int> omega(static_cast<std::size_t>(m));
  for (Index j = 0; j < m; ++j) omega[std::size_t(j)] = result.theta_hat.values(j) > 0.5 ? 1 : 0;
  return omega;
}

void LearningCurveSpec::validate() const {
  require(gamma > 0.0 && alpha > 0.0, "learning curve: gamma and alpha must be positive");
  require(delta > 0.0 && delta < 1.0 && amp > 0.0 && q > 0.0, "learning curve: need 0 < delta < 1, amp > 0, q > 0");
  require(!M_grid.empty(), "learning curve: empty M grid");
  for (std::size_t i = 0; i < M_grid.size(); ++i) {
    require(M_grid[i] >= 1 && (i == 0 || M_grid[i] > M_grid[i - 1]), "learning curve: M grid must be increasing and >= 1");
  }
  require(replications >= 1 && replications < (1 << 24), "learning curve: replications out of range");
  require(omega_count >= 1 && omega_count < (1 << 24), "learning curve: omega_count out of range");
  optimizer.validate();
}

int LearningCurveSpec::bumps_for(Index M) const {
  const Real exponent = 1.0 / (gamma + 2.0 * gamma / alpha + 1.0);
  return std::max(1, int(std::llround(q * std::pow(Real(M), exponent))));
}

LearningCurve learning_curve(const LearningCurveSpec& spec) {
  spec.validate();
  LearningCurve curve;
  Eigen::VectorXd Ms(Index(spec.M_grid.size()));
  Eigen::VectorXd regrets(Index(spec.M_grid.size()));
  for (std::size_t g = 0; g < spec.M_grid.size(); ++g) {
    const Index M = spec.M_grid[g];
    const int m = spec.bumps_for(M);
    auto stream = [&](std::uint64_t o, std::uint64_t r) { return ((g + 1) << 48) | (o << 24) | r; };
    std::vector<LowerBoundInstance> instances;
    for (int o = 0; o < spec.omega_count; ++o) {
      SubstreamRng rng({spec.seed, stream(std::uint64_t(o), 0xFFFFFF)}, 0);
      LowerBoundSpec ls;
      ls.m = m;
      ls.gamma = spec.gamma;
      ls.alpha = spec.alpha;
      ls.delta = spec.delta;
      ls.amp = spec.amp;
      for (int j = 0; j < m; ++j) ls.omega.push_back(rng.uniform() <= 0.5 ? 1 : 0);
      instances.emplace_back(std::move(ls));
    }
    const std::size_t runs = std::size_t(spec.omega_count) * std::size_t(spec.replications);
    std::vector<Real> values(runs);
    parallel_for(runs, [&](std::size_t i) {
      const std::size_t o = i / std::size_t(spec.replications);
      const std::size_t r = i % std::size_t(spec.replications);
      const auto& inst = instances[o];
      const auto data = sample(inst, M, spec.seed, stream(o, r));
      const auto omega_hat =
          spec.learner == LearnerKind::plug_in ? plug_in_learner(inst, data) : optimize_learner(inst, data, spec.optimizer);
      values[i] = regret_bits(inst, omega_hat);
    });
    const Eigen::Map<const Eigen::VectorXd> v(values.data(), Index(values.size()));
    LearningCurveRow row{M, m, v.mean(), sample_stddev(v) / std::sqrt(Real(v.size()))};
    curve.rows.push_back(row);
    Ms(Index(g)) = Real(M);
    regrets(Index(g)) = row.mean_regret;
  }
  if (curve.rows.size() >= 2 && (regrets.array() > 0.0).all()) curve.fit = fit_loglog(Ms, regrets);
  return curve;
}

Real holder_ratio(const LowerBoundInstance& instance, int pairs, std::uint64_t seed) {
  const Real gamma = instance.spec().gamma;
  const int degree = int(std::ceil(gamma)) - 1;
  require(degree <= 2, "holder_ratio: gamma above 3 needs derivatives beyond second order");
  const int m = instance.bumps();
  Real worst = 0.0;
  for (int i = 0; i < pairs; ++i) {
    SubstreamRng rng({seed, 0}, static_cast<std::uint32_t>(i));
    const Real x = rng.uniform();
    // Half the pairs stay within one bump width, where the increments are largest.
    const Real y = i % 2 == 0 ? rng.uniform() : std::clamp(x + (2.0 * rng.uniform() - 1.0) * 2.0 / m, 0.0, 1.0);
    if (x == y) continue;
    Real taylor = instance.boundary(x);
    Real power = 1.0;
    Real factorial = 1.0;
    for (int r = 1; r <= degree; ++r) {
      power *= (y - x);
      factorial *= r;
      taylor += instance.boundary_derivative(x, r) * power / factorial;
    }
    worst = std::max(worst, std::abs(instance.boundary(y) - taylor) / std::pow(std::abs(x - y), gamma));
  }
  return worst;
}

}  // namespace osp
