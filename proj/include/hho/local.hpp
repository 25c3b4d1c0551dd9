// Per-cell HHO objects: DOF layout, canonical interpolation, potential
// reconstruction into P_{k+2}(T), both stabilization variants, and the local
// stiffness/mass/load.
//
// Local unknown ordering: [cell block | facet value blocks 0..2 |
// facet normal-derivative blocks 0..2 | vertex values 0..2]. The facet
// normal-derivative block is stored w.r.t. the outward normal of the cell;
// the global system applies the +-1 facet orientation sign on scatter.

#pragma once

#include <Eigen/Dense>
#include <array>

#include "hho/basis.hpp"
#include "hho/mesh.hpp"

namespace hho {

struct DofLayout {
  int k = 0;    // facet normal-derivative degree
  int ell = 2;  // cell degree
  int m = 0;    // facet value degree, max{k-1,0}
  int cell_dim = 0;
  int facet_value_dim = 0;
  int facet_normal_dim = 0;
  int rec_dim = 0;  // dim P_{k+2}
  int n_local = 0;

  // ell < 0 selects the default ell = k+2.
  static DofLayout make(int k, int ell = -1);

  int cell_offset() const { return 0; }
  int facet_value_offset(int f) const { return cell_dim + f * facet_value_dim; }
  int facet_normal_offset(int f) const {
    return cell_dim + 3 * facet_value_dim + f * facet_normal_dim;
  }
  int vertex_offset(int i) const {
    return cell_dim + 3 * (facet_value_dim + facet_normal_dim) + i;
  }
};

enum class StabType { source, eigen };

struct StabVariant {
  StabType type = StabType::source;
  double sigma = 1.0;  // eigen variant only, must be positive
};

// A scalar field with enough derivatives for interpolation and error
// measurement; hess may be empty when unused.
struct Field {
  ScalarFunc value;
  std::function<Vec2(const Vec2&)> grad;
  std::function<Eigen::Matrix2d(const Vec2&)> hess;
};

struct LocalOperators {
  DofLayout layout;
  CellBasis rec_basis;   // degree k+2
  CellBasis cell_basis;  // degree ell
  std::array<FacetBasis, 3> value_basis;
  std::array<FacetBasis, 3> normal_basis;
  Eigen::MatrixXd reconstruction;  // rec_dim x n_local
  Eigen::MatrixXd hess_gram;       // rec_dim x rec_dim, (n^2 b_i, n^2 b_j)_T
  Eigen::MatrixXd stabilization;   // n_local x n_local, symmetric PSD
  // Scaled residual factors with stabilization = sum_i factors[i]^T factors[i];
  // summing squared factor responses evaluates s_T(v,v) without the
  // cancellation noise of the assembled matrix.
  std::vector<Eigen::MatrixXd> stab_factors;
  Eigen::MatrixXd stiffness;       // reconstruction^T hess_gram reconstruction + stab
};

LocalOperators build_local(const Mesh& mesh, int cell, const DofLayout& layout,
                           const StabVariant& variant = {});

// Canonical interpolation I_T of a field with values and gradient.
Eigen::VectorXd interpolate(const Mesh& mesh, int cell, const LocalOperators& ops,
                            const Field& v);

// Load vector (f, phi_i)_T on the cell block, zero elsewhere; oversampled rule.
Eigen::VectorXd local_load(const Mesh& mesh, int cell, const LocalOperators& ops,
                           const ScalarFunc& f);

// Cell-block mass: identity on the cell block under the orthonormal basis.
Eigen::MatrixXd local_mass_cell(const DofLayout& layout);

// Default quadrature exactness for bilinear terms and the data oversampling.
int bilinear_exactness(const DofLayout& layout);
int data_exactness(const DofLayout& layout);

}  // namespace hho
