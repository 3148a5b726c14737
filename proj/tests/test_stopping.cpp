#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "enumerate.hpp"
#include "osp/oracle.hpp"
#include "osp/stopping.hpp"

#include <cmath>

using namespace osp;

TEST_CASE("max-call region membership") {
  const MaxCallFamily f;
  Eigen::VectorXd x(2);
  x << 110.0, 90.0;
  CHECK(region_contains(f, Theta::Zero(2), 1, 9, x));
  CHECK_FALSE(region_contains(f, (Theta(2) << 15.0, 0.0).finished(), 1, 9, x));
  CHECK(region_contains(f, (Theta(2) << 9.0, 19.0).finished(), 1, 9, x));
  CHECK_FALSE(region_contains(f, (Theta(2) << 9.0, 20.0).finished(), 1, 9, x));  // strict inequality
  CHECK(region_contains(f, (Theta(2) << 1e9, 1e9).finished(), 9, 9, x));        // S_K = E
}

TEST_CASE("max-call features of more than two assets use the top two coordinates") {
  Eigen::VectorXd x(4);
  x << 95.0, 120.0, 80.0, 111.0;
  const auto f = max_call_features(x, 100.0);
  CHECK(f.itm == 20.0);
  CHECK(f.spread == 9.0);
}

TEST_CASE("per-date theta switches regions date by date") {
  MaxCallFamily f;
  f.shared = false;
  f.dates = 3;
  Eigen::VectorXd x(2);
  x << 120.0, 100.0;
  const Theta theta = (Theta(4) << 30.0, 0.0, 5.0, 0.0).finished();
  CHECK_FALSE(region_contains(f, theta, 1, 3, x));
  CHECK(region_contains(f, theta, 2, 3, x));
}

TEST_CASE("discounted max-call payoff") {
  const MaxCallPayoff g{100.0, 0.05, 3.0, 9};
  Eigen::VectorXd x(2);
  x << 90.0, 112.0;
  CHECK(g(3, x) == doctest::Approx(12.0 * std::exp(-0.05)).epsilon(1e-15));
  const MaxCallPayoff plain{100.0};
  CHECK(plain(3, x) == 12.0);
}

TEST_CASE("pathwise indicator sum equals the payoff at the first entry time on gbm paths") {
  const GbmSpec spec;
  const PathSet paths = simulate_paths(spec, 5000, 4, 0);
  const RegionFamily family = MaxCallFamily{};
  const PayoffSpec payoff = MaxCallPayoff{100.0, spec.rate, spec.horizon, spec.dates};
  const Eigen::MatrixXd G = payoff_matrix(payoff, paths);
  for (const Theta& theta : {Theta::Zero(2).eval(), (Theta(2) << 10.0, 5.0).finished(), (Theta(2) << 50.0, 50.0).finished()}) {
    for (Index m = 0; m < 5000; ++m) {
      const int tau = first_entry_time(paths, m, family, theta);
      REQUIRE(tau >= 1);
      REQUIRE(tau <= spec.dates);
      CHECK(pathwise_payoff(paths, m, family, theta, payoff) == G(m, tau - 1));
    }
  }
}

TEST_CASE("pathwise identity on chain paths with the table family") {
  const auto inst = random_instance(3, 4, 12, 0);
  const PathSet paths = simulate_paths(inst.chain, 3000, 5, 0);
  const TableFamily family{3, 4};
  const PayoffSpec payoff = inst.payoffs;
  const Eigen::MatrixXd G = payoff_matrix(payoff, paths);
  for (int r = 0; r < 20; ++r) {
    const Theta theta = to_theta(random_region(3, 4, 12, std::uint64_t(r)));
    for (Index m = 0; m < 3000; ++m) {
      const int tau = first_entry_time(paths, m, family, theta);
      CHECK(pathwise_payoff(paths, m, family, theta, payoff) == G(m, tau - 1));
    }
  }
}

TEST_CASE("first entry time is K when no earlier set is hit") {
  const DiscreteRegion none = DiscreteRegion::last_date_only(4, 2);
  CHECK(first_entry_time(none, Eigen::VectorXi::Zero(4)) == 4);
  const DiscreteRegion all = DiscreteRegion::full(4, 2);
  CHECK(first_entry_time(all, Eigen::VectorXi::Zero(4)) == 1);
}

TEST_CASE("table family round trip") {
  const DiscreteRegion r = random_region(3, 5, 1, 2);
  CHECK(to_discrete_region(TableFamily{3, 5}, to_theta(r)).member == r.member);
}

TEST_CASE("exact pseudodistances match path enumeration") {
  for (std::uint64_t i = 0; i < 30; ++i) {
    const auto inst = random_instance(3, 4, 21, i);
    const auto a = random_region(3, 4, 21, 1000 + i);
    const auto b = random_region(3, 4, 21, 2000 + i);
    double dx = 0.0;
    double alive = 0.0;
    for_each_path(inst.chain, [&](const Eigen::VectorXi& path, double p) {
      bool stopped_b = false;
      for (int k = 1; k <= 4; ++k) {
        const bool differ = a.contains(k, path(k - 1)) != b.contains(k, path(k - 1));
        if (differ) dx += p;
        if (differ && !stopped_b) alive += p;
        stopped_b = stopped_b || b.contains(k, path(k - 1));
      }
    });
    CHECK(pseudodistance_dX(a, b, inst.chain) == doctest::Approx(dx).epsilon(1e-13));
    CHECK(disagreement_distance(a, b, inst.chain) == doctest::Approx(alive).epsilon(1e-13));
  }
}

TEST_CASE("pseudodistance properties") {
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto inst = random_instance(3, 3, 8, i);
    const auto a = random_region(3, 3, 8, 100 + i);
    const auto b = random_region(3, 3, 8, 200 + i);
    CHECK(pseudodistance_dX(a, a, inst.chain) == 0.0);
    CHECK(pseudodistance_DeltaX(a, a, inst.chain) == 0.0);
    CHECK(pseudodistance_dX(a, b, inst.chain) == pseudodistance_dX(b, a, inst.chain));
    CHECK(pseudodistance_DeltaX(a, b, inst.chain) <= pseudodistance_dX(a, b, inst.chain) + 1e-15);
    CHECK(disagreement_distance(a, b, inst.chain) <= pseudodistance_dX(a, b, inst.chain) + 1e-15);
  }
}

TEST_CASE("set-algebra distance to the full region vanishes") {
  const auto inst = random_instance(3, 4, 2, 0);
  const auto a = random_region(3, 4, 2, 9);
  CHECK(pseudodistance_DeltaX(a, DiscreteRegion::full(4, 3), inst.chain) == 0.0);
}

TEST_CASE("monte carlo d_X agrees with the exact value") {
  const auto inst = random_instance(3, 4, 30, 0);
  const auto a = random_region(3, 4, 30, 1);
  const auto b = random_region(3, 4, 30, 2);
  const PathSet paths = simulate_paths(inst.chain, 100000, 6, 0);
  const TableFamily family{3, 4};
  const Estimate mc = pseudodistance_dX(family, to_theta(a), to_theta(b), paths);
  CHECK(std::abs(mc.value - pseudodistance_dX(a, b, inst.chain)) <= 4.0 * mc.standard_error);
}

TEST_CASE("set-algebra distance is not defined for continuous processes") {
  CHECK_THROWS_AS(pseudodistance_DeltaX(MaxCallFamily{}, Theta::Zero(2), Theta::Zero(2), GbmSpec{}), UnsupportedOperation);
}

TEST_CASE("empty theta box is rejected") {
  ThetaBox box{Eigen::VectorXd::Constant(2, 1.0), Eigen::VectorXd::Zero(2)};
  CHECK_THROWS_AS(box.validate(), ParameterError);
}
