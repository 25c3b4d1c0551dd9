// A posteriori error estimation (facet jump terms, stabilization energy, data
// oscillation, low-order residual terms), exact errors against manufactured
// solutions, Doerfler marking, and empirical convergence rates.

#pragma once

#include <vector>

#include "hho/system.hpp"

namespace hho {

// Per-cell squared indicator components. Interior facet terms are attributed
// to both neighboring cells, so the global estimator is not the plain sum of
// per-cell totals; `global_sq` counts each facet once.
struct Indicators {
  Eigen::VectorXd jump;        // facet value/normal-derivative jumps of R_h
  Eigen::VectorXd stab;        // s_T(u_h, u_h)
  Eigen::VectorXd osc;         // h_T^4 ||(1-Pi_T)f||^2, source estimator only
  Eigen::VectorXd extra_jump;  // low-order (ell = 0) facet families
  Eigen::VectorXd volume;      // low-order volume residual ||h^2(f - D^4 R u)||^2
  double global_sq = 0.0;

  Eigen::VectorXd cell_totals() const {
    return jump + stab + osc + extra_jump + volume;
  }
};

// h_T^4 ||(1 - Pi_T^ell) f||_T^2 per cell.
Eigen::VectorXd oscillation(const Discretization& d, const ScalarFunc& f);

// Per-facet h_F^{-3}||[R_h u]||_F^2 + h_F^{-1}||[d_n R_h u]||_F^2; boundary
// facets penalize the trace itself.
Eigen::VectorXd mu_jumps(const Discretization& d, const Eigen::VectorXd& u);

struct EtaResult {
  double value = 0.0;  // global estimator (square root of the sum)
  Indicators indicators;
};

// Source-problem estimator; the ell = 0 layout adds second/third-order facet
// jumps and the volume residual.
EtaResult eta_source(const Discretization& d, const Eigen::VectorXd& u,
                     const ScalarFunc& f);

// Eigenvalue estimator: jumps + stabilization, no data terms.
EtaResult eta_eigen(const Discretization& d, const Eigen::VectorXd& u);

struct ExactErrors {
  double energy = 0.0;  // ||D^2_pw (u_exact - R_h u_h)||
  double l2 = 0.0;      // ||Pi^ell u_exact - u_T||
};

ExactErrors exact_errors(const Discretization& d, const Eigen::VectorXd& u,
                         const Field& exact);

// Smallest cell set carrying theta of the total squared indicator; descending
// sort, ties by cell id. Throws for theta outside (0, 1].
std::vector<int> dorfler_mark(const Eigen::VectorXd& indicators_sq,
                              double theta);

// Consecutive slopes log(e_i/e_{i+1}) / log(x_{i+1}/x_i).
std::vector<double> eoc(const std::vector<double>& errors,
                        const std::vector<double>& abscissae);

}  // namespace hho
