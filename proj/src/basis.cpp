#include "hho/basis.hpp"

#include <cmath>
#include <stdexcept>

namespace hho {

namespace {

// Falling factorial n(n-1)...(n-k+1); zero when k > n.
double falling(int n, int k) {
  if (k > n) return 0.0;
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= (n - i);
  return r;
}

// Monomial exponents (a,b) with a+b <= degree, graded ordering.
std::vector<std::array<int, 2>> monomial_exponents(int degree) {
  std::vector<std::array<int, 2>> exps;
  for (int o = 0; o <= degree; ++o)
    for (int b = 0; b <= o; ++b) exps.push_back({o - b, b});
  return exps;
}

// Orthonormalize columns w.r.t. the weighted inner product V^T diag(w) V via
// two Cholesky passes.
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& values,
                               const Eigen::VectorXd& weights) {
  const int n = static_cast<int>(values.cols());
  Eigen::MatrixXd coeff = Eigen::MatrixXd::Identity(n, n);
  for (int pass = 0; pass < 2; ++pass) {
    Eigen::MatrixXd v = values * coeff;
    Eigen::MatrixXd gram = v.transpose() * weights.asDiagonal() * v;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("basis orthonormalization failed (singular Gram)");
    coeff = llt.matrixL().solve(coeff.transpose()).transpose();
  }
  return coeff;
}

}  // namespace

MappedRule map_to_cell(const QuadratureRule& rule, const Mesh& mesh, int cell) {
  const Cell& c = mesh.cells[cell];
  const Vec2& p0 = mesh.points[c.v[0]];
  const Vec2 e1 = mesh.points[c.v[1]] - p0;
  const Vec2 e2 = mesh.points[c.v[2]] - p0;
  MappedRule out;
  out.points.resize(rule.size());
  out.weights = rule.weights * (2.0 * c.area);
  for (int q = 0; q < rule.size(); ++q)
    out.points[q] = p0 + rule.points(q, 0) * e1 + rule.points(q, 1) * e2;
  return out;
}

MappedRule map_to_facet(const QuadratureRule& rule, const Mesh& mesh, int facet) {
  const Facet& f = mesh.facets[facet];
  const Vec2& a = mesh.points[f.v[0]];
  const Vec2 d = mesh.points[f.v[1]] - a;
  MappedRule out;
  out.points.resize(rule.size());
  out.weights = rule.weights * f.length;
  for (int q = 0; q < rule.size(); ++q) out.points[q] = a + rule.points(q, 0) * d;
  return out;
}

CellBasis::CellBasis(const Mesh& mesh, int cell, int degree) : degree_(degree) {
  const Cell& c = mesh.cells[cell];
  h_ = c.h;
  center_ = c.centroid;
  const MappedRule rule = map_to_cell(cell_rule(2 * std::max(degree, 1)), mesh, cell);
  const auto exps = monomial_exponents(degree);
  Eigen::MatrixXd mono(rule.points.size(), exps.size());
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const double x = (rule.points[q].x() - center_.x()) / h_;
    const double y = (rule.points[q].y() - center_.y()) / h_;
    for (std::size_t j = 0; j < exps.size(); ++j)
      mono(q, j) = std::pow(x, exps[j][0]) * std::pow(y, exps[j][1]);
  }
  coeff_ = orthonormalize(mono, rule.weights);
}

Eigen::MatrixXd CellBasis::values(const std::vector<Vec2>& pts) const {
  const auto exps = monomial_exponents(degree_);
  Eigen::MatrixXd mono(pts.size(), exps.size());
  for (std::size_t q = 0; q < pts.size(); ++q) {
    const double x = (pts[q].x() - center_.x()) / h_;
    const double y = (pts[q].y() - center_.y()) / h_;
    for (std::size_t j = 0; j < exps.size(); ++j)
      mono(q, j) = std::pow(x, exps[j][0]) * std::pow(y, exps[j][1]);
  }
  return mono * coeff_;
}

DerivTables CellBasis::eval(const std::vector<Vec2>& pts, int max_order) const {
  if (max_order < 0 || max_order > kMaxDerivOrder)
    throw std::invalid_argument("derivative order above 4 is unsupported");
  const auto exps = monomial_exponents(degree_);
  const int npts = static_cast<int>(pts.size());
  DerivTables tables;
  Eigen::MatrixXd mono(npts, exps.size());
  for (int o = 0; o <= max_order; ++o)
    for (int db = 0; db <= o; ++db) {
      const int da = o - db;
      const double scale = std::pow(h_, -o);
      for (int q = 0; q < npts; ++q) {
        const double x = (pts[q].x() - center_.x()) / h_;
        const double y = (pts[q].y() - center_.y()) / h_;
        for (std::size_t j = 0; j < exps.size(); ++j) {
          const int a = exps[j][0], b = exps[j][1];
          if (da > a || db > b) {
            mono(q, j) = 0.0;
          } else {
            mono(q, j) = falling(a, da) * falling(b, db) * std::pow(x, a - da) *
                         std::pow(y, b - db) * scale;
          }
        }
      }
      tables[deriv_index(da, db)] = mono * coeff_;
    }
  return tables;
}

FacetBasis::FacetBasis(const Mesh& mesh, int facet, int degree) : degree_(degree) {
  const Facet& f = mesh.facets[facet];
  h_ = f.length;
  mid_ = f.midpoint;
  tangent_ = f.tangent;
  const MappedRule rule = map_to_facet(facet_rule(2 * std::max(degree, 1)), mesh, facet);
  Eigen::MatrixXd mono(rule.points.size(), degree + 1);
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const double s = (rule.points[q] - mid_).dot(tangent_) / h_;
    for (int j = 0; j <= degree; ++j) mono(q, j) = std::pow(s, j);
  }
  coeff_ = orthonormalize(mono, rule.weights);
}

Eigen::MatrixXd FacetBasis::values(const std::vector<Vec2>& pts) const {
  Eigen::MatrixXd mono(pts.size(), degree_ + 1);
  for (std::size_t q = 0; q < pts.size(); ++q) {
    const double s = (pts[q] - mid_).dot(tangent_) / h_;
    for (int j = 0; j <= degree_; ++j) mono(q, j) = std::pow(s, j);
  }
  return mono * coeff_;
}

Eigen::VectorXd project(const CellBasis& basis, const MappedRule& rule,
                        const ScalarFunc& f) {
  Eigen::VectorXd fvals(rule.points.size());
  for (std::size_t q = 0; q < rule.points.size(); ++q) fvals(q) = f(rule.points[q]);
  return basis.values(rule.points).transpose() * rule.weights.cwiseProduct(fvals);
}

Eigen::VectorXd project(const FacetBasis& basis, const MappedRule& rule,
                        const ScalarFunc& f) {
  Eigen::VectorXd fvals(rule.points.size());
  for (std::size_t q = 0; q < rule.points.size(); ++q) fvals(q) = f(rule.points[q]);
  return basis.values(rule.points).transpose() * rule.weights.cwiseProduct(fvals);
}

}  // namespace hho
