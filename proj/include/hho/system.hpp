// Global DOF numbering, sparse symmetric assembly with strong elimination of
// the clamped boundary, static condensation (cell or skeleton blocks), direct
// SPD solves, the generalized eigensolve, and the guaranteed lower eigenvalue
// bound.

#pragma once

#include <Eigen/Sparse>
#include <iosfwd>
#include <memory>
#include <vector>

#include "hho/local.hpp"

namespace hho {

// Global ordering: cell blocks for every cell first, then value blocks of the
// interior facets, then normal-derivative blocks of the interior facets, then
// one scalar per interior vertex. Boundary facet and vertex unknowns do not
// exist (homogeneous clamped conditions). The shared normal-derivative block
// is stored once per facet w.r.t. nu_F; the scatter applies the +-1 facet
// orientation sign of each adjacent cell.
struct DofMap {
  DofLayout layout;
  std::vector<int> facet_value_off;   // -1 on boundary facets
  std::vector<int> facet_normal_off;  // -1 on boundary facets
  std::vector<int> vertex_off;        // -1 on boundary vertices
  int n_cell = 0;      // all cell-block unknowns
  int n_skeleton = 0;  // everything else
  int n_total = 0;

  int cell_off(int cell) const { return cell * layout.cell_dim; }

  static DofMap make(const Mesh& mesh, const DofLayout& layout);
};

// Per-cell operators plus the assembled sparse matrix and scatter tables.
struct Discretization {
  Mesh mesh;
  DofLayout layout;
  StabVariant variant;
  DofMap dofs;
  std::vector<LocalOperators> local;
  Eigen::SparseMatrix<double> A;
  std::vector<std::vector<int>> scatter_index;  // per cell, -1 = boundary
  std::vector<Eigen::VectorXd> scatter_sign;

  // Restriction of a global vector to the local dofs of one cell (boundary
  // entries zero, normal blocks flipped to the outward-normal convention).
  Eigen::VectorXd gather_local(int cell, const Eigen::VectorXd& x) const;

  // Coefficients of R_T applied to the local restriction of x.
  Eigen::VectorXd reconstruct(int cell, const Eigen::VectorXd& x) const;
};

Discretization assemble(Mesh mesh, const DofLayout& layout,
                        const StabVariant& variant = {});

Eigen::VectorXd assemble_load(const Discretization& d, const ScalarFunc& f);

// Componentwise canonical interpolation of a smooth field (value + gradient).
Eigen::VectorXd interpolate_global(const Discretization& d, const Field& v);

// Cell-block mass matrix: identity on cell unknowns, zero on the skeleton.
Eigen::SparseMatrix<double> cell_mass(const DofMap& dofs);

enum class Eliminate { cells, skeleton };

// Exact Schur-complement elimination of one partition. Eliminating the cell
// blocks uses their block-diagonal structure; eliminating the skeleton uses a
// sparse Cholesky factorization of the skeleton-skeleton block.
class CondensedSystem {
 public:
  CondensedSystem(const Discretization& d, Eliminate eliminate);

  Eliminate eliminated() const { return eliminated_; }
  const Eigen::SparseMatrix<double>& schur() const { return schur_; }

  // Reduced right-hand side rhs_k - A_ke A_ee^{-1} rhs_e.
  Eigen::VectorXd reduce_rhs(const Eigen::VectorXd& rhs_full) const;
  // Full vector from a kept-partition solution (and the full rhs, which may
  // be zero for eigenvector recovery).
  Eigen::VectorXd expand(const Eigen::VectorXd& x_kept,
                         const Eigen::VectorXd& rhs_full) const;

 private:
  Eliminate eliminated_;
  int n_cell_, n_total_, cell_dim_ = 0;
  Eigen::SparseMatrix<double> schur_;     // kept x kept
  Eigen::SparseMatrix<double> coupling_;  // A_ek, eliminated x kept
  // cells route: per-cell Cholesky of the diagonal blocks
  std::vector<Eigen::LLT<Eigen::MatrixXd>> cell_llt_;
  // skeleton route
  std::shared_ptr<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>> skel_llt_;

  Eigen::VectorXd solve_eliminated(const Eigen::VectorXd& b) const;
};

// Direct Cholesky solve; throws on an indefinite matrix or a relative
// residual above 1e-10.
Eigen::VectorXd solve_spd(const Eigen::SparseMatrix<double>& A,
                          const Eigen::VectorXd& b);

struct EigenPairs {
  Eigen::VectorXd values;  // ascending
  std::vector<Eigen::VectorXd> vectors;  // full HHO vectors, b_h-orthonormal
};

// First `count` eigenpairs of A x = lambda B x with B the cell-block mass.
// Dense skeleton-condensed solve at small sizes, preconditioned inverse
// subspace iteration otherwise. Signs fixed so the cell block's inner product
// with `reference` (or its own first nonzero coefficient) is >= 0. Residual
// contract: ||A x - lambda B x|| <= 1e-8 ||A x||.
EigenPairs solve_gevp(const Discretization& d, int count,
                      const Eigen::VectorXd* reference = nullptr,
                      unsigned seed = 1u);

struct LebResult {
  double leb;
  double alpha;
  double beta;
};

// Guaranteed lower bound min{1, 1/(alpha + beta*lambda_h)} * lambda_h with
// alpha = sigma*(1/pi^4 + c/pi^2 + c + c*(2/pi + 2/pi^2)), c = (2+3/pi)/pi,
// beta = h_max^4/pi^4.
LebResult leb(double lambda_h, double sigma, double h_max);

// "row col value" per stored entry, for external verification.
void write_coordinate(std::ostream& os, const Eigen::SparseMatrix<double>& A);

}  // namespace hho
