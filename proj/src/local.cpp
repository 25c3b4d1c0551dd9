#include "hho/local.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hho {

DofLayout DofLayout::make(int k, int ell) {
  if (k < 0) throw std::invalid_argument("degree k must be nonnegative");
  if (ell < 0) ell = k + 2;
  const int ell_min = std::max(k - 2, 0);
  if (ell < ell_min)
    throw std::invalid_argument("cell degree ell below the minimum max{k-2,0}");
  DofLayout layout;
  layout.k = k;
  layout.ell = ell;
  layout.m = std::max(k - 1, 0);
  layout.cell_dim = dim_poly_2d(ell);
  layout.facet_value_dim = layout.m + 1;
  layout.facet_normal_dim = k + 1;
  layout.rec_dim = dim_poly_2d(k + 2);
  layout.n_local = layout.cell_dim +
                   3 * (layout.facet_value_dim + layout.facet_normal_dim) + 3;
  return layout;
}

int bilinear_exactness(const DofLayout& layout) {
  return 2 * std::max(layout.ell, layout.k + 2) + 2;
}

int data_exactness(const DofLayout& layout) { return bilinear_exactness(layout) + 4; }

namespace {

struct FacetFrame {
  Vec2 nu;      // nu_F (global)
  Vec2 tau;     // tau_F (global)
  double sign;  // nu_F . nu_{dT}
};

// Directional composites of the derivative tables at a set of points.
Eigen::MatrixXd dir_nn(const DerivTables& t, const Vec2& n) {
  return n.x() * n.x() * t[deriv_index(2, 0)] +
         2.0 * n.x() * n.y() * t[deriv_index(1, 1)] +
         n.y() * n.y() * t[deriv_index(0, 2)];
}

Eigen::MatrixXd dir_tn(const DerivTables& t, const Vec2& tau, const Vec2& n) {
  return tau.x() * n.x() * t[deriv_index(2, 0)] +
         (tau.x() * n.y() + tau.y() * n.x()) * t[deriv_index(1, 1)] +
         tau.y() * n.y() * t[deriv_index(0, 2)];
}

Eigen::MatrixXd dir_n_laplace(const DerivTables& t, const Vec2& n) {
  return n.x() * (t[deriv_index(3, 0)] + t[deriv_index(1, 2)]) +
         n.y() * (t[deriv_index(2, 1)] + t[deriv_index(0, 3)]);
}

Eigen::MatrixXd dir_ttn(const DerivTables& t, const Vec2& tau, const Vec2& n) {
  const double tx = tau.x(), ty = tau.y(), nx = n.x(), ny = n.y();
  return tx * tx * nx * t[deriv_index(3, 0)] +
         (tx * tx * ny + 2.0 * tx * ty * nx) * t[deriv_index(2, 1)] +
         (ty * ty * nx + 2.0 * tx * ty * ny) * t[deriv_index(1, 2)] +
         ty * ty * ny * t[deriv_index(0, 3)];
}

Eigen::MatrixXd dir_n(const DerivTables& t, const Vec2& n) {
  return n.x() * t[deriv_index(1, 0)] + n.y() * t[deriv_index(0, 1)];
}

Eigen::MatrixXd bilaplacian(const DerivTables& t) {
  return t[deriv_index(4, 0)] + 2.0 * t[deriv_index(2, 2)] + t[deriv_index(0, 4)];
}

}  // namespace

LocalOperators build_local(const Mesh& mesh, int cell, const DofLayout& layout,
                           const StabVariant& variant) {
  if (variant.type == StabType::eigen && variant.sigma <= 0.0)
    throw std::invalid_argument("eigen stabilization parameter sigma must be positive");

  const Cell& c = mesh.cells[cell];
  LocalOperators ops;
  ops.layout = layout;
  ops.rec_basis = CellBasis(mesh, cell, layout.k + 2);
  ops.cell_basis = CellBasis(mesh, cell, layout.ell);

  const int D = layout.rec_dim;
  const int n_local = layout.n_local;

  const QuadratureRule cq = cell_rule(bilinear_exactness(layout));
  const QuadratureRule fq = facet_rule(bilinear_exactness(layout));
  const MappedRule crule = map_to_cell(cq, mesh, cell);

  const DerivTables cell_tab = ops.rec_basis.eval(crule.points, 4);
  const Eigen::MatrixXd wb0 = crule.weights.asDiagonal() * cell_tab[deriv_index(0, 0)];

  // Hessian Gram on P_{k+2}(T).
  const Eigen::MatrixXd& dxx = cell_tab[deriv_index(2, 0)];
  const Eigen::MatrixXd& dxy = cell_tab[deriv_index(1, 1)];
  const Eigen::MatrixXd& dyy = cell_tab[deriv_index(0, 2)];
  ops.hess_gram = dxx.transpose() * crule.weights.asDiagonal() * dxx +
                  2.0 * dxy.transpose() * crule.weights.asDiagonal() * dxy +
                  dyy.transpose() * crule.weights.asDiagonal() * dyy;

  const Eigen::MatrixXd cell_vals = ops.cell_basis.values(crule.points);
  // Mixed cell Gram (phi_i, b_j)_T: projection of P_{k+2} onto the cell block.
  const Eigen::MatrixXd cell_gram = cell_vals.transpose() * crule.weights.asDiagonal() *
                                    cell_tab[deriv_index(0, 0)];

  // Right-hand side of the reconstruction problem, one column per local dof.
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(D, n_local);
  rhs.block(0, layout.cell_offset(), D, layout.cell_dim) =
      bilaplacian(cell_tab).transpose() * crule.weights.asDiagonal() * cell_vals;

  // Constraint rows: means of b_j and of its gradient.
  Eigen::MatrixXd constraints(3, D);
  constraints.row(0) = crule.weights.transpose() * cell_tab[deriv_index(0, 0)];
  constraints.row(1) = crule.weights.transpose() * cell_tab[deriv_index(1, 0)];
  constraints.row(2) = crule.weights.transpose() * cell_tab[deriv_index(0, 1)];
  Eigen::MatrixXd constraint_rhs = Eigen::MatrixXd::Zero(3, n_local);
  constraint_rhs.block(0, layout.cell_offset(), 1, layout.cell_dim) =
      crule.weights.transpose() * cell_vals;

  std::array<FacetFrame, 3> frames;
  std::array<MappedRule, 3> frules;
  std::array<Eigen::MatrixXd, 3> value_vals, normal_vals;
  std::array<DerivTables, 3> facet_tab;
  for (int f = 0; f < 3; ++f) {
    const int fid = c.facet[f];
    const Facet& facet = mesh.facets[fid];
    frames[f] = {facet.normal, facet.tangent, c.facet_sign[f]};
    ops.value_basis[f] = FacetBasis(mesh, fid, layout.m);
    ops.normal_basis[f] = FacetBasis(mesh, fid, layout.k);
    frules[f] = map_to_facet(fq, mesh, fid);
    value_vals[f] = ops.value_basis[f].values(frules[f].points);
    normal_vals[f] = ops.normal_basis[f].values(frules[f].points);
    facet_tab[f] = ops.rec_basis.eval(frules[f].points, 3);

    // Boundary contributions. The normal is nu_{dT} = sign * nu_F, the
    // tangential direction tau_F; an odd number of normal factors picks up
    // one sign factor, dnn picks up two (= none).
    const FacetFrame& fr = frames[f];
    const Eigen::MatrixXd wv = frules[f].weights.asDiagonal() * value_vals[f];
    const Eigen::MatrixXd wn = frules[f].weights.asDiagonal() * normal_vals[f];
    rhs.block(0, layout.facet_value_offset(f), D, layout.facet_value_dim) =
        -fr.sign * (dir_n_laplace(facet_tab[f], fr.nu) +
                    dir_ttn(facet_tab[f], fr.tau, fr.nu))
                       .transpose() *
        wv;
    rhs.block(0, layout.facet_normal_offset(f), D, layout.facet_normal_dim) =
        dir_nn(facet_tab[f], fr.nu).transpose() * wn;
    constraint_rhs.block(1, layout.facet_value_offset(f), 2, layout.facet_value_dim) =
        fr.sign * fr.nu * (frules[f].weights.transpose() * value_vals[f]);
  }

  // Vertex terms: sum over the two facets meeting at each vertex, with the
  // outward tangential sign of the facet at that endpoint.
  std::vector<Vec2> vertex_pts = {mesh.points[c.v[0]], mesh.points[c.v[1]],
                                  mesh.points[c.v[2]]};
  const DerivTables vtx_tab = ops.rec_basis.eval(vertex_pts, 2);
  for (int f = 0; f < 3; ++f) {
    const FacetFrame& fr = frames[f];
    const Eigen::MatrixXd tn = fr.sign * dir_tn(vtx_tab, fr.tau, fr.nu);
    for (int e = 0; e < 2; ++e) {
      const int lv = Mesh::facet_vertices[f][e];
      const Facet& facet = mesh.facets[c.facet[f]];
      const double endpoint_sign =
          ((vertex_pts[lv] - facet.midpoint).dot(fr.tau) > 0.0) ? 1.0 : -1.0;
      rhs.col(layout.vertex_offset(lv)) += endpoint_sign * tn.row(lv).transpose();
    }
  }

  // Saddle-point solve: Hessian Gram with three mean-value constraints.
  Eigen::MatrixXd saddle = Eigen::MatrixXd::Zero(D + 3, D + 3);
  saddle.topLeftCorner(D, D) = ops.hess_gram;
  saddle.topRightCorner(D, 3) = constraints.transpose();
  saddle.bottomLeftCorner(3, D) = constraints;
  Eigen::MatrixXd full_rhs(D + 3, n_local);
  full_rhs.topRows(D) = rhs;
  full_rhs.bottomRows(3) = constraint_rhs;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(saddle);
  if (std::abs(lu.determinant()) < 1e-300)
    throw std::runtime_error("singular reconstruction system (quadrature bug?)");
  ops.reconstruction = lu.solve(full_rhs).topRows(D);

  // Trace/projection residual operators for the stabilization.
  const Eigen::MatrixXd& R = ops.reconstruction;
  auto selector = [&](int offset, int dim) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(dim, n_local);
    e.block(0, offset, dim, dim).setIdentity();
    return e;
  };

  Eigen::MatrixXd diff_cell = selector(layout.cell_offset(), layout.cell_dim) -
                              cell_gram * R;
  std::array<Eigen::MatrixXd, 3> diff_val, diff_nrm;
  for (int f = 0; f < 3; ++f) {
    const Eigen::MatrixXd trace_val = value_vals[f].transpose() *
                                      frules[f].weights.asDiagonal() *
                                      facet_tab[f][deriv_index(0, 0)];
    const Eigen::MatrixXd trace_nrm =
        normal_vals[f].transpose() * frules[f].weights.asDiagonal() *
        (frames[f].sign * dir_n(facet_tab[f], frames[f].nu));
    diff_val[f] = selector(layout.facet_value_offset(f), layout.facet_value_dim) -
                  trace_val * R;
    diff_nrm[f] = selector(layout.facet_normal_offset(f), layout.facet_normal_dim) -
                  trace_nrm * R;
  }
  std::array<Eigen::RowVectorXd, 3> diff_vtx;
  for (int i = 0; i < 3; ++i) {
    Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(n_local);
    e(layout.vertex_offset(i)) = 1.0;
    diff_vtx[i] = e - vtx_tab[deriv_index(0, 0)].row(i) * R;
  }

  const double h = c.h;
  auto add_factor = [&](double weight, const Eigen::MatrixXd& diff) {
    ops.stab_factors.push_back(std::sqrt(weight) * diff);
  };
  if (variant.type == StabType::source) {
    add_factor(std::pow(h, -4), diff_cell);
    for (int f = 0; f < 3; ++f) {
      add_factor(std::pow(h, -3), diff_val[f]);
      add_factor(std::pow(h, -1), diff_nrm[f]);
    }
    for (int i = 0; i < 3; ++i) add_factor(std::pow(h, -2), diff_vtx[i]);
  } else {
    const double sigma = variant.sigma;
    add_factor(sigma * std::pow(h, -4), diff_cell);
    for (int f = 0; f < 3; ++f) {
      const double lF = h * h * mesh.facets[c.facet[f]].length / c.area;
      const double lEF = h * h / mesh.facets[c.facet[f]].length;
      add_factor(sigma * std::pow(h, -2) / lF, diff_val[f]);
      add_factor(sigma / lF, diff_nrm[f]);
      for (int e = 0; e < 2; ++e) {
        const int lv = Mesh::facet_vertices[f][e];
        add_factor(sigma / (lF * lEF), diff_vtx[lv]);
      }
    }
  }
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n_local, n_local);
  for (const Eigen::MatrixXd& fac : ops.stab_factors)
    S += fac.transpose() * fac;
  S = 0.5 * (S + S.transpose()).eval();
  ops.stabilization = std::move(S);
  Eigen::MatrixXd K = R.transpose() * ops.hess_gram * R;
  K = 0.5 * (K + K.transpose()).eval();
  ops.stiffness = K + ops.stabilization;
  return ops;
}

Eigen::VectorXd interpolate(const Mesh& mesh, int cell, const LocalOperators& ops,
                            const Field& v) {
  const DofLayout& layout = ops.layout;
  const Cell& c = mesh.cells[cell];
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.n_local);

  const MappedRule crule = map_to_cell(cell_rule(data_exactness(layout)), mesh, cell);
  out.segment(layout.cell_offset(), layout.cell_dim) =
      project(ops.cell_basis, crule, v.value);

  const QuadratureRule fq = facet_rule(data_exactness(layout));
  for (int f = 0; f < 3; ++f) {
    const Facet& facet = mesh.facets[c.facet[f]];
    const MappedRule frule = map_to_facet(fq, mesh, c.facet[f]);
    out.segment(layout.facet_value_offset(f), layout.facet_value_dim) =
        project(ops.value_basis[f], frule, v.value);
    const double sign = c.facet_sign[f];
    const Vec2 nu = facet.normal;
    out.segment(layout.facet_normal_offset(f), layout.facet_normal_dim) = project(
        ops.normal_basis[f], frule,
        [&](const Vec2& x) { return sign * nu.dot(v.grad(x)); });
  }
  for (int i = 0; i < 3; ++i)
    out(layout.vertex_offset(i)) = v.value(mesh.points[c.v[i]]);
  return out;
}

Eigen::VectorXd local_load(const Mesh& mesh, int cell, const LocalOperators& ops,
                           const ScalarFunc& f) {
  const DofLayout& layout = ops.layout;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.n_local);
  const MappedRule crule = map_to_cell(cell_rule(data_exactness(layout)), mesh, cell);
  out.segment(layout.cell_offset(), layout.cell_dim) =
      project(ops.cell_basis, crule, f);
  return out;
}

Eigen::MatrixXd local_mass_cell(const DofLayout& layout) {
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(layout.n_local, layout.n_local);
  mass.block(0, 0, layout.cell_dim, layout.cell_dim).setIdentity();
  return mass;
}

}  // namespace hho
