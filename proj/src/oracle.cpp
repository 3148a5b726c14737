#include "osp/oracle.hpp"

#include "osp/parallel.hpp"
#include "osp/random.hpp"
#include "osp/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace osp {

namespace {

// Sum_j P(s, j) w(j) in ascending j; every exact solver goes through this one expression.
template <typename Vector>
Real continuation(const Eigen::MatrixXd& P, int s, const Vector& w) {
  Real sum = 0.0;
  for (Index j = 0; j < P.cols(); ++j) sum += P(s, j) * w(j);
  return sum;
}

void check_region(const DiscreteInstance& instance, const DiscreteRegion& region) {
  require(region.dates() == instance.dates() && region.states() == instance.states(),
          "region does not match the instance dimensions");
  for (int s = 0; s < instance.states(); ++s) {
    require(region.contains(instance.dates(), s), "the last stopping set must be the whole state space");
  }
}

// Backward policy evaluation with membership given by a predicate.
template <typename Member>
Real policy_value_impl(const DiscreteInstance& instance, Member member, Eigen::VectorXd& w, Eigen::VectorXd& next) {
  const int K = instance.dates();
  const int S = instance.states();
  const auto& G = instance.payoffs.values;
  next = G.row(K - 1).transpose();
  for (int k = K - 1; k >= 1; --k) {
    const Eigen::MatrixXd& P = instance.chain.transition(k + 1);
    for (int s = 0; s < S; ++s) w(s) = member(k, s) ? G(k - 1, s) : continuation(P, s, next);
    next.swap(w);
  }
  return continuation(instance.chain.transition(1), instance.chain.initial, next);
}

// Backward moments of the payoff collected by `region` from a date, given the path is still alive.
struct PolicyMoments {
  Eigen::MatrixXd mean;    // row k-1: E[g | X_k = s, alive at k, decision at k pending]
  Eigen::MatrixXd second;  // same for g^2
};

PolicyMoments policy_moments(const DiscreteInstance& instance, const DiscreteRegion& region) {
  const int K = instance.dates();
  const int S = instance.states();
  const auto& G = instance.payoffs.values;
  PolicyMoments m{Eigen::MatrixXd(K, S), Eigen::MatrixXd(K, S)};
  m.mean.row(K - 1) = G.row(K - 1);
  m.second.row(K - 1) = G.row(K - 1).array().square();
  for (int k = K - 1; k >= 1; --k) {
    const Eigen::MatrixXd& P = instance.chain.transition(k + 1);
    const Eigen::VectorXd w1 = m.mean.row(k).transpose();
    const Eigen::VectorXd w2 = m.second.row(k).transpose();
    for (int s = 0; s < S; ++s) {
      const bool stop = region.contains(k, s);
      m.mean(k - 1, s) = stop ? G(k - 1, s) : continuation(P, s, w1);
      m.second(k - 1, s) = stop ? G(k - 1, s) * G(k - 1, s) : continuation(P, s, w2);
    }
  }
  return m;
}

}  // namespace

void DiscreteInstance::validate() const {
  chain.validate();
  require(payoffs.values.rows() == chain.dates && payoffs.values.cols() == chain.states,
          "payoff table must be dates x states");
  require(payoffs.values.allFinite(), "payoffs must be finite");
}

ValueTables backward_induction(const DiscreteInstance& instance) {
  instance.validate();
  const int K = instance.dates();
  const int S = instance.states();
  const auto& G = instance.payoffs.values;
  ValueTables t{Eigen::MatrixXd(K, S), Eigen::MatrixXd(K, S), DiscreteRegion::last_date_only(K, S)};
  t.V.row(K - 1) = G.row(K - 1);
  t.C.row(K - 1) = G.row(K - 1);
  for (int k = K - 1; k >= 1; --k) {
    const Eigen::MatrixXd& P = instance.chain.transition(k + 1);
    const Eigen::VectorXd next = t.V.row(k).transpose();
    for (int s = 0; s < S; ++s) {
      const Real c = continuation(P, s, next);
      t.C(k - 1, s) = c;
      const bool stop = c <= G(k - 1, s);
      t.region_star.member(k - 1, s) = stop;
      t.V(k - 1, s) = stop ? G(k - 1, s) : c;
    }
  }
  return t;
}

Real optimal_value(const DiscreteInstance& instance, const ValueTables& tables) {
  const Eigen::VectorXd v1 = tables.V.row(0).transpose();
  return continuation(instance.chain.transition(1), instance.chain.initial, v1);
}

Real optimal_value(const DiscreteInstance& instance) { return optimal_value(instance, backward_induction(instance)); }

Real exact_region_value(const DiscreteInstance& instance, const DiscreteRegion& region) {
  instance.validate();
  check_region(instance, region);
  const auto& G = instance.payoffs.values;
  Eigen::RowVectorXd alive = instance.chain.transition(1).row(instance.chain.initial);
  Real value = 0.0;
  for (int k = 1; k <= instance.dates(); ++k) {
    for (int s = 0; s < instance.states(); ++s) {
      if (!region.contains(k, s)) continue;
      value += alive(s) * G(k - 1, s);
      alive(s) = 0.0;
    }
    if (k < instance.dates()) alive = alive * instance.chain.transition(k + 1);
  }
  return value;
}

Real policy_value(const DiscreteInstance& instance, const DiscreteRegion& region) {
  instance.validate();
  check_region(instance, region);
  Eigen::VectorXd w(instance.states());
  Eigen::VectorXd next(instance.states());
  return policy_value_impl(instance, [&](int k, int s) { return region.contains(k, s); }, w, next);
}

RegionSearchResult exhaustive_region_search(const DiscreteInstance& instance) {
  instance.validate();
  const int K = instance.dates();
  const int S = instance.states();
  const long long bits = static_cast<long long>(S) * (K - 1);
  if (bits > max_search_bits) {
    throw SizeError("exhaustive_region_search: " + std::to_string(bits) + " membership bits exceed the guard of " +
                    std::to_string(max_search_bits));
  }
  const std::uint64_t total = std::uint64_t{1} << bits;
  // Coordinate i = (k-1)*S + s sits at bit (bits-1-i), so numeric order of r is lexicographic order.
  auto member_of = [bits, S](std::uint64_t r) {
    return [r, bits, S](int k, int s) {
      const long long i = static_cast<long long>(k - 1) * S + s;
      return ((r >> (bits - 1 - i)) & 1u) != 0;
    };
  };
  constexpr std::uint64_t block = 4096;
  const std::uint64_t blocks = (total + block - 1) / block;
  std::vector<Real> best_value(blocks, -std::numeric_limits<Real>::infinity());
  std::vector<std::uint64_t> best_index(blocks, 0);
  parallel_for(blocks, [&](std::size_t b) {
    Eigen::VectorXd w(S);
    Eigen::VectorXd next(S);
    const std::uint64_t end = std::min<std::uint64_t>(total, (b + 1) * block);
    for (std::uint64_t r = b * block; r < end; ++r) {
      const Real v = policy_value_impl(instance, member_of(r), w, next);
      if (v > best_value[b]) {
        best_value[b] = v;
        best_index[b] = r;
      }
    }
  });
  RegionSearchResult result{DiscreteRegion::last_date_only(K, S), -std::numeric_limits<Real>::infinity(), total};
  std::uint64_t winner = 0;
  for (std::uint64_t b = 0; b < blocks; ++b) {
    if (best_value[b] > result.value) {
      result.value = best_value[b];
      winner = best_index[b];
    }
  }
  const auto member = member_of(winner);
  for (int k = 1; k < K; ++k) {
    for (int s = 0; s < S; ++s) result.region.member(k - 1, s) = member(k, s);
  }
  return result;
}

BasicIdentityCheck lemma_bi_check(const DiscreteInstance& instance, const DiscreteRegion& region) {
  const ValueTables t = backward_induction(instance);
  check_region(instance, region);
  const auto& G = instance.payoffs.values;
  BasicIdentityCheck out;
  out.lhs = optimal_value(instance, t) - exact_region_value(instance, region);
  Eigen::RowVectorXd alive = instance.chain.transition(1).row(instance.chain.initial);
  for (int k = 1; k < instance.dates(); ++k) {
    for (int s = 0; s < instance.states(); ++s) {
      if (t.region_star.contains(k, s) != region.contains(k, s)) out.rhs += alive(s) * std::abs(G(k - 1, s) - t.C(k - 1, s));
      if (region.contains(k, s)) alive(s) = 0.0;
    }
    alive = alive * instance.chain.transition(k + 1);
  }
  out.gap = std::abs(out.lhs - out.rhs);
  return out;
}

Real payoff_distance(const DiscreteInstance& instance, const DiscreteRegion& a, const DiscreteRegion& b) {
  instance.validate();
  check_region(instance, a);
  check_region(instance, b);
  const int K = instance.dates();
  const auto& G = instance.payoffs.values;
  const PolicyMoments ma = policy_moments(instance, a);
  const PolicyMoments mb = policy_moments(instance, b);
  // Once exactly one rule stops at (k, s) with payoff g, the other continues from date k+1:
  // E[(g - g')^2] = g^2 - 2 g E[g'] + E[g'^2].
  auto squared_gap = [&](const PolicyMoments& other, int k, int s) {
    const Eigen::MatrixXd& P = instance.chain.transition(k + 1);
    const Eigen::VectorXd w1 = other.mean.row(k).transpose();
    const Eigen::VectorXd w2 = other.second.row(k).transpose();
    const Real g = G(k - 1, s);
    return std::max(Real(0), g * g - 2.0 * g * continuation(P, s, w1) + continuation(P, s, w2));
  };
  Eigen::RowVectorXd both = instance.chain.transition(1).row(instance.chain.initial);
  Real total = 0.0;
  for (int k = 1; k < K; ++k) {
    for (int s = 0; s < instance.states(); ++s) {
      const bool in_a = a.contains(k, s);
      const bool in_b = b.contains(k, s);
      if (in_a && !in_b) total += both(s) * squared_gap(mb, k, s);
      if (in_b && !in_a) total += both(s) * squared_gap(ma, k, s);
      if (in_a || in_b) both(s) = 0.0;
    }
    both = both * instance.chain.transition(k + 1);
  }
  return std::sqrt(total);
}

Real delta_x(const DiscreteInstance& instance, const DiscreteRegion& a, const DiscreteRegion& b, DistanceForm form) {
  return form == DistanceForm::set_algebra ? pseudodistance_DeltaX(a, b, instance.chain)
                                           : disagreement_distance(a, b, instance.chain);
}

Real payoff_bound(const DiscreteInstance& instance) { return instance.payoffs.values.cwiseAbs().maxCoeff(); }

PayoffDistanceCheck dfx_check(const DiscreteInstance& instance, const DiscreteRegion& a, const DiscreteRegion& b,
                              DistanceForm form) {
  PayoffDistanceCheck c;
  c.delta_g = payoff_distance(instance, a, b);
  c.delta_x = delta_x(instance, a, b, form);
  c.bound = 2.0 * payoff_bound(instance) * std::sqrt(2.0 * c.delta_x);
  c.holds = c.delta_g <= c.bound + inequality_slack;
  return c;
}

std::vector<GapAtom> gap_distribution(const DiscreteInstance& instance, const ValueTables& tables) {
  const Eigen::MatrixXd marginals = marginal_distributions(instance.chain);
  std::vector<GapAtom> atoms;
  for (int k = 1; k < instance.dates(); ++k) {
    for (int s = 0; s < instance.states(); ++s) {
      const Real mass = marginals(k - 1, s);
      if (mass > 0.0) atoms.push_back({std::abs(instance.payoffs.values(k - 1, s) - tables.C(k - 1, s)), mass});
    }
  }
  std::sort(atoms.begin(), atoms.end(), [](const GapAtom& x, const GapAtom& y) { return x.gap < y.gap; });
  return atoms;
}

Real margin_mass(const std::vector<GapAtom>& atoms, Real delta, bool inclusive) {
  Real total = 0.0;
  for (const auto& a : atoms) {
    if (a.gap < delta || (inclusive && a.gap == delta)) total += a.mass;
  }
  return total;
}

MarginProbe margin_probe(const std::vector<GapAtom>& atoms, const std::vector<Real>& delta_grid,
                         std::optional<Real> delta0) {
  require(!delta_grid.empty(), "margin_probe: empty delta grid");
  for (Real d : delta_grid) require(d > 0.0, "margin_probe: grid points must be positive");
  MarginProbe probe;
  probe.delta_grid = delta_grid;
  std::vector<Real> xs;
  std::vector<Real> ys;
  for (Real d : delta_grid) {
    const Real p = margin_mass(atoms, d);
    probe.probability.push_back(p);
    if (p > 0.0) {
      xs.push_back(d);
      ys.push_back(p);
    }
  }
  const bool distinct = xs.size() >= 2 && *std::max_element(xs.begin(), xs.end()) > *std::min_element(xs.begin(), xs.end());
  if (!distinct) throw DegenerateFit("margin_probe: fewer than two grid points carry mass");
  const auto fit = fit_loglog(Eigen::Map<const Eigen::VectorXd>(xs.data(), Index(xs.size())),
                              Eigen::Map<const Eigen::VectorXd>(ys.data(), Index(ys.size())));
  probe.alpha = fit.slope;
  probe.alpha_stderr = fit.slope_stderr;
  probe.delta0 = delta0.value_or(std::min(0.49, *std::max_element(delta_grid.begin(), delta_grid.end())));
  require(probe.delta0 > 0.0 && probe.delta0 < 0.5, "margin_probe: delta0 must lie in (0, 1/2)");
  const bool atom_at_zero = std::any_of(atoms.begin(), atoms.end(), [](const GapAtom& a) { return a.gap == 0.0; });
  if (probe.alpha > 0.0 && !atom_at_zero) {
    Real sup = 0.0;
    for (const auto& a : atoms) {
      if (a.gap > probe.delta0) break;
      sup = std::max(sup, margin_mass(atoms, a.gap, true) / std::pow(a.gap, probe.alpha));
    }
    probe.A0 = sup;
  }
  return probe;
}

MarginProbe margin_probe(const DiscreteInstance& instance, const std::vector<Real>& delta_grid,
                         std::optional<Real> delta0) {
  return margin_probe(gap_distribution(instance, backward_induction(instance)), delta_grid, delta0);
}

std::optional<DdxConstants> ddx_constants(const MarginProbe& probe) {
  if (!(probe.alpha > 0.0) || !probe.A0) return std::nullopt;
  DdxConstants c;
  c.alpha = probe.alpha;
  c.A0 = *probe.A0;
  c.delta0 = probe.delta0;
  c.upsilon = c.A0 > 0.0 ? std::pow(c.A0, -1.0 / c.alpha) * c.alpha * std::pow(1.0 + c.alpha, -1.0 - 1.0 / c.alpha)
                         : std::numeric_limits<Real>::infinity();
  c.delta_alpha = c.A0 * (c.alpha + 1.0) * std::pow(c.delta0, c.alpha);
  return c;
}

DdxCheck ddx_check(const DiscreteInstance& instance, const ValueTables& tables, const DiscreteRegion& region,
                   const MarginProbe& probe, DistanceForm form) {
  DdxCheck out;
  const auto constants = ddx_constants(probe);
  if (!constants) return out;
  const auto& c = *constants;
  out.applicable = true;
  out.delta = optimal_value(instance, tables) - policy_value(instance, region);
  out.delta_x = delta_x(instance, tables.region_star, region, form);
  out.bad_in_range = out.delta_x <= c.delta_alpha;
  const Real lower = out.delta_x > 0.0 ? c.upsilon * std::pow(out.delta_x, (1.0 + c.alpha) / c.alpha) : 0.0;
  out.bad_slack = out.delta - lower;
  out.bad_holds = !out.bad_in_range || out.bad_slack >= -inequality_slack;
  out.bad1_slack = std::pow(2.0, 1.0 / c.alpha) / c.delta0 * out.delta + c.delta_alpha / (2.0 * (1.0 + c.alpha)) - out.delta_x;
  out.bad1_holds = out.bad1_slack >= -inequality_slack;
  return out;
}

DiscreteInstance random_instance(int states, int dates, std::uint64_t seed, std::uint64_t index) {
  require(states >= 1 && dates >= 1, "random_instance: need at least one state and one date");
  SubstreamRng rng({seed, index}, 0);
  DiscreteInstance inst;
  inst.chain.states = states;
  inst.chain.dates = dates;
  inst.chain.initial = 0;
  for (int k = 1; k <= dates; ++k) {
    Eigen::MatrixXd P(states, states);
    for (int i = 0; i < states; ++i) {
      for (int j = 0; j < states; ++j) P(i, j) = rng.uniform();
      P.row(i) /= P.row(i).sum();
    }
    inst.chain.transitions.push_back(P);
  }
  inst.payoffs.values.resize(dates, states);
  for (int k = 0; k < dates; ++k) {
    for (int s = 0; s < states; ++s) inst.payoffs.values(k, s) = rng.uniform();
  }
  return inst;
}

DiscreteRegion random_region(int states, int dates, std::uint64_t seed, std::uint64_t index) {
  SubstreamRng rng({seed, index}, 1);
  DiscreteRegion r = DiscreteRegion::last_date_only(dates, states);
  for (int k = 1; k < dates; ++k) {
    for (int s = 0; s < states; ++s) r.member(k - 1, s) = rng.uniform() < 0.5;
  }
  return r;
}

}  // namespace osp
