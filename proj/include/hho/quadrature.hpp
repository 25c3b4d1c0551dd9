// Quadrature rules on the reference triangle and the unit segment.
//
// Cell rules are conical products of a Gauss-Jacobi rule (weight 1-s) with a
// Gauss-Legendre rule; weights are positive and the rule is exact for any
// requested total degree up to kMaxDegree.

#pragma once

#include <Eigen/Dense>
#include <vector>

namespace hho {

struct QuadratureRule {
  // Reference coordinates: (x,y) on the triangle {x,y >= 0, x+y <= 1} for
  // cell rules, s on [0,1] for facet rules (y unused).
  Eigen::MatrixX2d points;
  Eigen::VectorXd weights;
  int exactness = 0;

  int size() const { return static_cast<int>(weights.size()); }
};

inline constexpr int kMaxQuadratureDegree = 60;

// Gauss-Legendre rule on [0,1], exact for polynomials of degree 2n-1.
QuadratureRule gauss_legendre(int n);

// Rule exact for all bivariate polynomials of the given total degree on the
// reference triangle. Throws std::invalid_argument above kMaxQuadratureDegree.
QuadratureRule cell_rule(int degree);

// Rule exact for univariate polynomials of the given degree on [0,1].
QuadratureRule facet_rule(int degree);

}  // namespace hho
