#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "enumerate.hpp"
#include "osp/optimize.hpp"
#include "osp/oracle.hpp"

#include <cmath>

using namespace osp;

namespace {

// States {a, b}; X_1 = a; from a the chain moves to a or b with probability 1/2; G_1 = (1, 0), G_2 = (0, 2).
DiscreteInstance hand_instance() {
  DiscreteInstance inst;
  inst.chain.states = 2;
  inst.chain.dates = 2;
  inst.chain.initial = 0;
  inst.chain.transitions = {Eigen::Matrix2d::Identity(), (Eigen::Matrix2d() << 0.5, 0.5, 0.0, 1.0).finished()};
  inst.payoffs.values = (Eigen::Matrix2d() << 1.0, 0.0, 0.0, 2.0).finished();
  return inst;
}

DiscreteRegion region_from(const std::vector<std::vector<int>>& rows) {
  DiscreteRegion r = DiscreteRegion::last_date_only(int(rows.size()) + 1, int(rows.front().size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (std::size_t s = 0; s < rows[k].size(); ++s) r.member(Index(k), Index(s)) = rows[k][s] == 1;
  }
  return r;
}

// E[g_S] and E[(g_S - g_S')^2] by summing over every trajectory.
double enumerated_value(const DiscreteInstance& inst, const DiscreteRegion& r) {
  double v = 0.0;
  for_each_path(inst.chain, [&](const Eigen::VectorXi& path, double p) {
    const int tau = first_entry_time(r, path);
    v += p * inst.payoffs(tau, path(tau - 1));
  });
  return v;
}

double enumerated_distance(const DiscreteInstance& inst, const DiscreteRegion& a, const DiscreteRegion& b) {
  double v = 0.0;
  for_each_path(inst.chain, [&](const Eigen::VectorXi& path, double p) {
    const int ta = first_entry_time(a, path);
    const int tb = first_entry_time(b, path);
    const double d = inst.payoffs(ta, path(ta - 1)) - inst.payoffs(tb, path(tb - 1));
    v += p * d * d;
  });
  return std::sqrt(v);
}

}  // namespace

TEST_CASE("hand instance: continuation and value at a") {
  const auto inst = hand_instance();
  const auto t = backward_induction(inst);
  CHECK(t.C(0, 0) == 1.0);
  CHECK(t.V(0, 0) == 1.0);
  CHECK(t.region_star.contains(1, 0));  // tie C = G stops
  CHECK(optimal_value(inst, t) == 1.0);
  CHECK(exhaustive_region_search(inst).value == 1.0);
  CHECK(exact_region_value(inst, region_from({{1, 0}})) == 1.0);
  const auto never = DiscreteRegion::last_date_only(2, 2);
  const auto bi = lemma_bi_check(inst, never);
  CHECK(bi.lhs == 0.0);
  CHECK(bi.rhs == 0.0);
}

TEST_CASE("hand instance: every deterministic rule from a") {
  const auto inst = hand_instance();
  // Stop at 1 (value 1) or continue (value 0.5 * 0 + 0.5 * 2 = 1); both are optimal.
  CHECK(exact_region_value(inst, region_from({{1, 1}})) == 1.0);
  CHECK(exact_region_value(inst, region_from({{0, 0}})) == 1.0);
  CHECK(exact_region_value(inst, region_from({{0, 1}})) == 1.0);
}

TEST_CASE("one date leaves no choice") {
  auto inst = random_instance(3, 1, 5, 0);
  const auto t = backward_induction(inst);
  CHECK(t.V == inst.payoffs.values);
  const auto best = exhaustive_region_search(inst);
  CHECK(best.regions_searched == 1);
  CHECK(best.value == optimal_value(inst, t));
  CHECK(exact_region_value(inst, DiscreteRegion::full(1, 3)) == doctest::Approx(inst.chain.transition(1).row(0).dot(inst.payoffs.values.row(0))));
}

TEST_CASE("zero payoffs stop everywhere") {
  auto inst = random_instance(3, 4, 6, 0);
  inst.payoffs.values.setZero();
  const auto t = backward_induction(inst);
  CHECK(t.V.isZero());
  CHECK(t.region_star.member.all());
}

TEST_CASE("bellman consistency and monotonicity on random instances") {
  for (std::uint64_t i = 0; i < 40; ++i) {
    auto inst = random_instance(4, 4, 7, i);
    const auto t = backward_induction(inst);
    for (int k = 1; k <= 4; ++k) {
      for (int s = 0; s < 4; ++s) {
        CHECK(t.V(k - 1, s) == std::max(inst.payoffs(k, s), t.C(k - 1, s)));
        CHECK(t.region_star.contains(k, s) == (k == 4 || t.C(k - 1, s) <= inst.payoffs(k, s)));
      }
    }
    auto raised = inst;
    raised.payoffs.values(int(i % 4), int((i / 4) % 4)) += 0.3;
    const auto r = backward_induction(raised);
    CHECK(((r.V - t.V).array() >= -1e-15).all());
  }
}

TEST_CASE("exhaustive search reproduces the backward induction value bit for bit") {
  for (std::uint64_t i = 0; i < 30; ++i) {
    const auto inst = random_instance(2 + int(i % 3), 2 + int(i % 3), 13, i);
    const auto t = backward_induction(inst);
    const auto best = exhaustive_region_search(inst);
    CHECK(best.value == optimal_value(inst, t));
    CHECK(policy_value(inst, t.region_star) == optimal_value(inst, t));
    CHECK(exact_region_value(inst, best.region) == doctest::Approx(best.value).epsilon(1e-14));
  }
}

TEST_CASE("exhaustive search breaks ties lexicographically") {
  auto inst = random_instance(2, 3, 14, 0);
  inst.payoffs.values.setConstant(1.0);
  const auto best = exhaustive_region_search(inst);
  CHECK(best.value == 1.0);
  CHECK_FALSE(best.region.member.topRows(2).any());
}

TEST_CASE("exhaustive search guard") {
  const auto inst = random_instance(5, 6, 1, 0);
  CHECK_THROWS_AS(exhaustive_region_search(inst), SizeError);
}

TEST_CASE("forward and backward region values agree with path enumeration") {
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto inst = random_instance(3, 4, 15, i);
    const auto r = random_region(3, 4, 15, 100 + i);
    const double e = enumerated_value(inst, r);
    CHECK(exact_region_value(inst, r) == doctest::Approx(e).epsilon(1e-14));
    CHECK(policy_value(inst, r) == doctest::Approx(e).epsilon(1e-14));
  }
}

TEST_CASE("monte carlo value agrees with the exact region value") {
  for (std::uint64_t i = 0; i < 5; ++i) {
    const auto inst = random_instance(3, 4, 16, i);
    const auto r = random_region(3, 4, 16, 50 + i);
    const PathSet paths = simulate_paths(inst.chain, 200000, 16, i);
    const Eigen::VectorXd g = BatchObjective(TableFamily{3, 4}, inst.payoffs, paths).stopped_payoffs(to_theta(r));
    const double sd = std::sqrt((g.array() - g.mean()).square().sum() / double(g.size() - 1));
    CHECK(std::abs(g.mean() - exact_region_value(inst, r)) <= 4.0 * sd / std::sqrt(double(g.size())));
  }
}

TEST_CASE("basic identity on random pairs") {
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto inst = random_instance(2 + int(i % 3), 2 + int(i % 4), 17, i);
    const auto r = random_region(inst.states(), inst.dates(), 17, 1000 + i);
    const auto bi = lemma_bi_check(inst, r);
    CHECK(bi.gap <= 1e-12);
    CHECK(bi.lhs >= -1e-15);
  }
  const auto inst = random_instance(3, 4, 17, 0);
  const auto star = backward_induction(inst).region_star;
  const auto bi = lemma_bi_check(inst, star);
  CHECK(bi.rhs == 0.0);
  CHECK(std::abs(bi.lhs) <= 1e-15);
}

TEST_CASE("payoff distance matches path enumeration") {
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto inst = random_instance(3, 4, 18, i);
    const auto a = random_region(3, 4, 18, 200 + i);
    const auto b = random_region(3, 4, 18, 300 + i);
    CHECK(payoff_distance(inst, a, b) == doctest::Approx(enumerated_distance(inst, a, b)).epsilon(1e-9));
    CHECK(payoff_distance(inst, a, a) == 0.0);
  }
}

TEST_CASE("payoff distance inequality with the path-event distance") {
  for (std::uint64_t i = 0; i < 300; ++i) {
    const auto inst = random_instance(2 + int(i % 3), 2 + int(i % 3), 19, i);
    const auto a = random_region(inst.states(), inst.dates(), 19, 500 + i);
    const auto b = random_region(inst.states(), inst.dates(), 19, 900 + i);
    CHECK(dfx_check(inst, a, b, DistanceForm::path_event).holds);
  }
}

TEST_CASE("set-algebra distance misses disagreements when the second region is the full space") {
  const auto inst = hand_instance();
  const auto a = DiscreteRegion::last_date_only(2, 2);
  const auto b = DiscreteRegion::full(2, 2);
  CHECK(delta_x(inst, a, b, DistanceForm::set_algebra) == 0.0);
  CHECK(payoff_distance(inst, a, b) > 0.0);
  CHECK_FALSE(dfx_check(inst, a, b, DistanceForm::set_algebra).holds);
  CHECK(dfx_check(inst, a, b, DistanceForm::path_event).holds);
}

TEST_CASE("margin probe on gap and atom cases") {
  const std::vector<GapAtom> gap{{0.2, 0.3}, {0.4, 0.1}};
  const std::vector<Real> grid{0.05, 0.1, 0.25, 0.3, 0.45};
  const auto p = margin_probe(gap, grid);
  CHECK(p.probability[0] == 0.0);
  CHECK(p.probability[1] == 0.0);
  CHECK(p.probability[2] == doctest::Approx(0.3));
  CHECK(p.probability[4] == doctest::Approx(0.4));
  const std::vector<GapAtom> atom{{0.0, 0.25}};
  const auto flat = margin_probe(atom, grid);
  CHECK(flat.alpha == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_FALSE(flat.A0.has_value());
  CHECK_THROWS_AS(margin_probe(std::vector<GapAtom>{{0.9, 1.0}}, grid), DegenerateFit);
}

TEST_CASE("margin probe recovers a power law") {
  std::vector<GapAtom> atoms;
  const int n = 4000;
  for (int i = 1; i <= n; ++i) atoms.push_back({0.5 * double(i) / n, 1.0 / n});  // uniform gaps: alpha = 1
  std::vector<Real> grid;
  for (int i = 0; i < 12; ++i) grid.push_back(0.01 * std::pow(40.0, i / 11.0));
  const auto p = margin_probe(atoms, grid);
  CHECK(p.alpha == doctest::Approx(1.0).epsilon(0.02));
  REQUIRE(p.A0.has_value());
  for (const auto& a : atoms) {
    if (a.gap <= p.delta0) CHECK(margin_mass(atoms, a.gap, true) <= *p.A0 * std::pow(a.gap, p.alpha) * (1 + 1e-12));
  }
}

TEST_CASE("DDX constants and the optimal region") {
  const auto inst = random_instance(3, 4, 20, 0);
  const auto t = backward_induction(inst);
  std::vector<Real> grid;
  for (int i = 0; i <= 24; ++i) grid.push_back(1e-3 * std::pow(490.0, i / 24.0));
  const auto probe = margin_probe(inst, grid);
  const auto c = ddx_constants(probe);
  REQUIRE(c.has_value());
  CHECK(c->upsilon == doctest::Approx(std::pow(c->A0, -1.0 / c->alpha) * c->alpha * std::pow(1 + c->alpha, -1 - 1 / c->alpha)));
  const auto at_star = ddx_check(inst, t, t.region_star, probe, DistanceForm::path_event);
  CHECK(at_star.delta == 0.0);
  CHECK(at_star.delta_x == 0.0);
  CHECK(at_star.bad_holds);
  CHECK(at_star.bad1_holds);
  for (std::uint64_t r = 0; r < 200; ++r) {
    const auto check = ddx_check(inst, t, random_region(3, 4, 20, r), probe, DistanceForm::path_event);
    CHECK(check.bad_holds);
    CHECK(check.bad1_holds);
  }
}

TEST_CASE("flipping only wide-margin states keeps BAD1 slack nonnegative") {
  const auto inst = random_instance(4, 3, 22, 0);
  const auto t = backward_induction(inst);
  std::vector<Real> grid;
  for (int i = 0; i <= 24; ++i) grid.push_back(1e-3 * std::pow(490.0, i / 24.0));
  const auto probe = margin_probe(inst, grid, 0.05);
  DiscreteRegion r = t.region_star;
  for (int k = 1; k < inst.dates(); ++k) {
    for (int s = 0; s < inst.states(); ++s) {
      if (std::abs(inst.payoffs(k, s) - t.C(k - 1, s)) >= probe.delta0) r.member(k - 1, s) = !r.member(k - 1, s);
    }
  }
  const auto check = ddx_check(inst, t, r, probe, DistanceForm::path_event);
  REQUIRE(check.applicable);
  CHECK(check.bad1_slack >= 0.0);
}

TEST_CASE("non-positive alpha makes DDX inapplicable") {
  MarginProbe probe;
  probe.alpha = 0.0;
  const auto inst = random_instance(2, 2, 1, 0);
  const auto t = backward_induction(inst);
  CHECK_FALSE(ddx_check(inst, t, t.region_star, probe, DistanceForm::path_event).applicable);
}
