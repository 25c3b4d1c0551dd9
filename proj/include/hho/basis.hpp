// L2-orthonormal polynomial bases on cells and facets, built from scaled
// monomials by Cholesky orthonormalization of the quadrature Gram matrix,
// with derivative evaluation up to order 4.

#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <vector>

#include "hho/mesh.hpp"
#include "hho/quadrature.hpp"

namespace hho {

inline int dim_poly_2d(int degree) { return (degree + 1) * (degree + 2) / 2; }

// Index of the partial derivative d^a_x d^b_y in a flat table (a+b <= 4).
inline int deriv_index(int a, int b) {
  const int o = a + b;
  return o * (o + 1) / 2 + b;
}
inline constexpr int kMaxDerivOrder = 4;
inline constexpr int kNumDerivSlots = 15;  // all (a,b) with a+b <= 4

using ScalarFunc = std::function<double(const Vec2&)>;

// Physical quadrature points and weights for one cell / facet.
struct MappedRule {
  std::vector<Vec2> points;
  Eigen::VectorXd weights;
};

MappedRule map_to_cell(const QuadratureRule& rule, const Mesh& mesh, int cell);
MappedRule map_to_facet(const QuadratureRule& rule, const Mesh& mesh, int facet);

// Derivative tables: table[deriv_index(a,b)] is (#points x #functions).
using DerivTables = std::array<Eigen::MatrixXd, kNumDerivSlots>;

class CellBasis {
 public:
  CellBasis() = default;
  // Orthonormal w.r.t. L2(T); the Gram matrix under a quadrature rule of
  // exactness >= 2*degree is the identity.
  CellBasis(const Mesh& mesh, int cell, int degree);

  int degree() const { return degree_; }
  int dim() const { return dim_poly_2d(degree_); }

  // Values of all basis functions at the given physical points.
  Eigen::MatrixXd values(const std::vector<Vec2>& pts) const;
  // Values and partial derivatives up to max_order <= 4.
  DerivTables eval(const std::vector<Vec2>& pts, int max_order) const;

 private:
  int degree_ = -1;
  double h_ = 1.0;
  Vec2 center_ = Vec2::Zero();
  Eigen::MatrixXd coeff_;  // monomial-to-orthonormal, column per function
};

class FacetBasis {
 public:
  FacetBasis() = default;
  // Orthonormal 1D basis in the arc-length parameter ((x - mid).tau)/h_F.
  FacetBasis(const Mesh& mesh, int facet, int degree);

  int degree() const { return degree_; }
  int dim() const { return degree_ + 1; }

  Eigen::MatrixXd values(const std::vector<Vec2>& pts) const;

 private:
  int degree_ = -1;
  double h_ = 1.0;
  Vec2 mid_ = Vec2::Zero();
  Vec2 tangent_ = Vec2::Zero();
  Eigen::MatrixXd coeff_;
};

// Coefficients of the L2(T)-projection of f in the orthonormal cell basis,
// integrated with the given physical rule.
Eigen::VectorXd project(const CellBasis& basis, const MappedRule& rule,
                        const ScalarFunc& f);
Eigen::VectorXd project(const FacetBasis& basis, const MappedRule& rule,
                        const ScalarFunc& f);

}  // namespace hho
