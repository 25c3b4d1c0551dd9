#include <doctest.h>

#include <cmath>

#include "hho/quadrature.hpp"
#include "oracles.hpp"

using namespace hho;

TEST_CASE("gauss-legendre integrates monomials to degree 2n-1") {
  for (int n = 1; n <= 12; ++n) {
    const QuadratureRule r = gauss_legendre(n);
    CHECK(r.weights.minCoeff() > 0.0);
    CHECK(r.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double s = 0.0;
      for (int q = 0; q < r.weights.size(); ++q)
        s += r.weights(q) * std::pow(r.points(q, 0), p);
      CHECK(s == doctest::Approx(1.0 / (p + 1)).epsilon(1e-13));
    }
  }
}

TEST_CASE("cell rule reproduces closed-form triangle moments") {
  for (int deg : {0, 1, 2, 5, 10, 20, 41}) {
    const QuadratureRule r = cell_rule(deg);
    CHECK(r.weights.minCoeff() > 0.0);
    CHECK(r.weights.sum() == doctest::Approx(0.5).epsilon(1e-14));
    for (int a = 0; a + 0 <= deg; ++a)
      for (int b = 0; a + b <= deg; ++b) {
        double s = 0.0;
        for (int q = 0; q < r.weights.size(); ++q)
          s += r.weights(q) * std::pow(r.points(q, 0), a) *
               std::pow(r.points(q, 1), b);
        const double exact = oracle::reference_moment(a, b);
        CHECK(std::abs(s - exact) <= 1e-14 + 1e-13 * exact);
      }
  }
}

TEST_CASE("cell rule points lie inside the reference triangle") {
  const QuadratureRule r = cell_rule(30);
  for (int q = 0; q < r.weights.size(); ++q) {
    CHECK(r.points(q, 0) > 0.0);
    CHECK(r.points(q, 1) > 0.0);
    CHECK(r.points(q, 0) + r.points(q, 1) < 1.0);
  }
}

TEST_CASE("degree cap is enforced with a helpful message") {
  CHECK_NOTHROW(cell_rule(kMaxQuadratureDegree));
  CHECK_THROWS_AS(cell_rule(kMaxQuadratureDegree + 1), std::invalid_argument);
  CHECK_THROWS_AS(facet_rule(1000), std::invalid_argument);
  CHECK_THROWS_AS(cell_rule(-1), std::invalid_argument);
}
