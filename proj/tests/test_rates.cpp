#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "osp/random.hpp"
#include "osp/rates.hpp"

using namespace osp;

TEST_CASE("upper exponent examples") {
  CHECK(upper_rate_exponent(1.0, 1.0) == 0.5);
  CHECK(upper_rate_exponent(1.0, 1e-12) == doctest::Approx(2.0 / 3.0));
  CHECK(upper_rate_exponent(1e9, 1e-12) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(upper_rate_exponent(0.0, 0.5), ParameterError);
  CHECK_THROWS_AS(upper_rate_exponent(1.0, 0.0), ParameterError);
  CHECK_THROWS_AS(upper_rate_exponent(1.0, 1.5), ParameterError);
}

TEST_CASE("lower exponent examples") {
  // (1+1) / (2 + 1 (1 + 1/1)) = 2/4
  CHECK(lower_rate_exponent(1.0, 1.0, 2) == 0.5);
  CHECK(lower_rate_exponent(1.0, 1e12, 2) == doctest::Approx(2.0 / 3.0));
  CHECK(lower_rate_exponent(3.0, 1e12, 5) == doctest::Approx(4.0 / 5.0));
  CHECK_THROWS_AS(lower_rate_exponent(1.0, 1.0, 1), ParameterError);
  CHECK_THROWS_AS(lower_rate_exponent(1.0, -1.0, 2), ParameterError);
}

TEST_CASE("lower equals upper when rho = (d-1)/gamma") {
  SubstreamRng rng({2024, 0}, 0);
  for (int i = 0; i < 100; ++i) {
    const double alpha = 0.05 + 10.0 * rng.uniform();
    const int dim = 2 + int(rng.uniform() * 6);
    const double gamma = (dim - 1) * (1.0 + 4.0 * rng.uniform());  // keeps rho in (0, 1]
    const double rho = double(dim - 1) / gamma;
    CHECK(lower_rate_exponent(alpha, gamma, dim) == upper_rate_exponent(alpha, rho));
  }
}

TEST_CASE("upper exponent lies in [1/2, 1)") {
  SubstreamRng rng({2025, 0}, 0);
  for (int i = 0; i < 1000; ++i) {
    const double alpha = 1e-3 + 50.0 * rng.uniform();
    const double rho = 1e-3 + (1.0 - 1e-3) * rng.uniform();
    const double e = upper_rate_exponent(alpha, rho);
    CHECK(e >= 0.5);
    CHECK(e < 1.0);
  }
}

TEST_CASE("budget exponent and M for N") {
  CHECK(budget_exponent(1.0, 0.0) == 0.75);
  CHECK(m_for_n(10000, 1.0, 0.0) == 1000);
  CHECK(budget_exponent(1.0, 1.0) == 1.0);
  CHECK(m_for_n(12345, 1.0, 1.0) == 12345);
  CHECK(m_for_n(1, 2.0, 0.3) == 1);
  CHECK_THROWS_AS(m_for_n(0, 1.0, 0.0), ParameterError);
  CHECK_THROWS_AS(budget_exponent(1.0, -0.1), ParameterError);
}

TEST_CASE("M for N is nondecreasing") {
  for (double alpha : {0.25, 1.0, 4.0}) {
    for (double rho : {0.0, 0.5, 1.0}) {
      std::int64_t prev = 0;
      for (std::int64_t N = 1; N <= 200000; N += 1 + N / 50) {
        const auto M = m_for_n(N, alpha, rho);
        CHECK(M >= prev);
        CHECK(M >= 1);
        prev = M;
      }
    }
  }
}

TEST_CASE("Holder entropy exponent") {
  CHECK(holder_entropy_exponent(1.0, 2, 2) == 1.0);
  CHECK(holder_entropy_exponent(2.0, 2, 2) == 0.5);
  CHECK(holder_entropy_exponent(0.7, 1, 9) == 0.0);
  CHECK(holder_entropy_exponent(3.0, 4, 3) == 2.0);
  CHECK_THROWS_AS(holder_entropy_exponent(0.0, 2, 2), ParameterError);
}

TEST_CASE("rate inputs validation") {
  RateInputs in;
  CHECK_NOTHROW(in.validate());
  in.rho = 0.0;
  CHECK_THROWS_AS(in.validate(), ParameterError);
  in.rho = 0.5;
  in.dim = 1;
  CHECK_THROWS_AS(in.validate(), ParameterError);
}
