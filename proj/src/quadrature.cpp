#include "hho/quadrature.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hho {

namespace {

// Golub-Welsch: nodes/weights from the symmetric tridiagonal Jacobi matrix of
// a three-term recurrence (alpha_i diagonal, sqrt(beta_i) off-diagonal).
void golub_welsch(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                  Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  const int n = static_cast<int>(alpha.size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    J(i, i) = alpha(i);
    if (i + 1 < n) {
      const double b = std::sqrt(beta(i + 1));
      J(i, i + 1) = b;
      J(i + 1, i) = b;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes = es.eigenvalues();
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    weights(i) = beta(0) * v0 * v0;
  }
}

// Gauss-Legendre on [-1,1].
void legendre_rule(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd beta(n);
  beta(0) = 2.0;
  for (int k = 1; k < n; ++k) beta(k) = 1.0 / (4.0 - 1.0 / (k * static_cast<double>(k)));
  golub_welsch(alpha, beta, nodes, weights);
}

// Gauss-Jacobi with weight (1-x) on [-1,1], i.e. Jacobi parameters (1,0).
void jacobi10_rule(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  Eigen::VectorXd alpha(n), beta(n);
  alpha(0) = -1.0 / 3.0;
  beta(0) = 2.0;
  for (int k = 1; k < n; ++k) {
    alpha(k) = -1.0 / ((2.0 * k + 1.0) * (2.0 * k + 3.0));
    beta(k) = k * (k + 1.0) / ((2.0 * k + 1.0) * (2.0 * k + 1.0));
  }
  golub_welsch(alpha, beta, nodes, weights);
}

void check_degree(int degree) {
  if (degree < 0) throw std::invalid_argument("quadrature degree must be nonnegative");
  if (degree > kMaxQuadratureDegree)
    throw std::invalid_argument("quadrature degree " + std::to_string(degree) +
                                " exceeds the maximum supported degree " +
                                std::to_string(kMaxQuadratureDegree));
}

}  // namespace

QuadratureRule gauss_legendre(int n) {
  Eigen::VectorXd x, w;
  legendre_rule(n, x, w);
  QuadratureRule rule;
  rule.points.resize(n, 2);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.points(i, 0) = 0.5 * (x(i) + 1.0);
    rule.points(i, 1) = 0.0;
    rule.weights(i) = 0.5 * w(i);
  }
  rule.exactness = 2 * n - 1;
  return rule;
}

QuadratureRule facet_rule(int degree) {
  check_degree(degree);
  return gauss_legendre(degree / 2 + 1);
}

QuadratureRule cell_rule(int degree) {
  check_degree(degree);
  const int q = degree / 2 + 1;
  Eigen::VectorXd xs, ws;  // Jacobi(1,0) direction, collapsed
  jacobi10_rule(q, xs, ws);
  Eigen::VectorXd xt, wt;  // Legendre direction
  legendre_rule(q, xt, wt);

  QuadratureRule rule;
  rule.points.resize(q * q, 2);
  rule.weights.resize(q * q);
  int idx = 0;
  for (int i = 0; i < q; ++i) {
    const double s = 0.5 * (xs(i) + 1.0);
    // weight on [0,1] with factor (1-s): ds scaling 1/2, weight scaling 1/2
    const double wi = 0.25 * ws(i);
    for (int j = 0; j < q; ++j) {
      const double t = 0.5 * (xt(j) + 1.0);
      rule.points(idx, 0) = s;
      rule.points(idx, 1) = t * (1.0 - s);
      rule.weights(idx) = wi * 0.5 * wt(j);
      ++idx;
    }
  }
  rule.exactness = 2 * q - 1;
  return rule;
}

}  // namespace hho
