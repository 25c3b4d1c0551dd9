#include "hho/system.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace hho {

DofMap DofMap::make(const Mesh& mesh, const DofLayout& layout) {
  DofMap map;
  map.layout = layout;
  map.n_cell = mesh.n_cells() * layout.cell_dim;
  int next = map.n_cell;
  map.facet_value_off.assign(mesh.n_facets(), -1);
  map.facet_normal_off.assign(mesh.n_facets(), -1);
  map.vertex_off.assign(mesh.n_vertices(), -1);
  for (int f : mesh.interior_facets) {
    map.facet_value_off[f] = next;
    next += layout.facet_value_dim;
  }
  for (int f : mesh.interior_facets) {
    map.facet_normal_off[f] = next;
    next += layout.facet_normal_dim;
  }
  for (int v : mesh.interior_vertices) map.vertex_off[v] = next++;
  map.n_total = next;
  map.n_skeleton = next - map.n_cell;
  return map;
}

Eigen::VectorXd Discretization::gather_local(int cell,
                                             const Eigen::VectorXd& x) const {
  const std::vector<int>& idx = scatter_index[cell];
  const Eigen::VectorXd& sign = scatter_sign[cell];
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.n_local);
  for (int i = 0; i < layout.n_local; ++i)
    if (idx[i] >= 0) out(i) = sign(i) * x(idx[i]);
  return out;
}

Eigen::VectorXd Discretization::reconstruct(int cell,
                                            const Eigen::VectorXd& x) const {
  return local[cell].reconstruction * gather_local(cell, x);
}

Discretization assemble(Mesh mesh, const DofLayout& layout,
                        const StabVariant& variant) {
  Discretization d;
  d.mesh = std::move(mesh);
  d.layout = layout;
  d.variant = variant;
  d.dofs = DofMap::make(d.mesh, layout);
  const int nc = d.mesh.n_cells();
  d.local.resize(nc);
  d.scatter_index.resize(nc);
  d.scatter_sign.resize(nc);

  for (int c = 0; c < nc; ++c) {
    d.local[c] = build_local(d.mesh, c, layout, variant);
    const Cell& cell = d.mesh.cells[c];
    std::vector<int>& idx = d.scatter_index[c];
    idx.assign(layout.n_local, -1);
    Eigen::VectorXd sign = Eigen::VectorXd::Ones(layout.n_local);
    for (int i = 0; i < layout.cell_dim; ++i)
      idx[layout.cell_offset() + i] = d.dofs.cell_off(c) + i;
    for (int f = 0; f < 3; ++f) {
      const int fid = cell.facet[f];
      if (d.dofs.facet_value_off[fid] >= 0)
        for (int i = 0; i < layout.facet_value_dim; ++i)
          idx[layout.facet_value_offset(f) + i] = d.dofs.facet_value_off[fid] + i;
      if (d.dofs.facet_normal_off[fid] >= 0)
        for (int i = 0; i < layout.facet_normal_dim; ++i) {
          idx[layout.facet_normal_offset(f) + i] = d.dofs.facet_normal_off[fid] + i;
          sign(layout.facet_normal_offset(f) + i) = cell.facet_sign[f];
        }
    }
    for (int i = 0; i < 3; ++i)
      idx[layout.vertex_offset(i)] = d.dofs.vertex_off[cell.v[i]];
    d.scatter_sign[c] = std::move(sign);
  }

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(nc) * layout.n_local * layout.n_local);
  for (int c = 0; c < nc; ++c) {
    const Eigen::MatrixXd& a = d.local[c].stiffness;
    const std::vector<int>& idx = d.scatter_index[c];
    const Eigen::VectorXd& s = d.scatter_sign[c];
    for (int i = 0; i < layout.n_local; ++i) {
      if (idx[i] < 0) continue;
      for (int j = 0; j < layout.n_local; ++j) {
        if (idx[j] < 0) continue;
        trip.emplace_back(idx[i], idx[j], s(i) * s(j) * a(i, j));
      }
    }
  }
  d.A.resize(d.dofs.n_total, d.dofs.n_total);
  d.A.setFromTriplets(trip.begin(), trip.end());
  return d;
}

Eigen::VectorXd assemble_load(const Discretization& d, const ScalarFunc& f) {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d.dofs.n_total);
  for (int c = 0; c < d.mesh.n_cells(); ++c) {
    const Eigen::VectorXd lf = local_load(d.mesh, c, d.local[c], f);
    const std::vector<int>& idx = d.scatter_index[c];
    const Eigen::VectorXd& s = d.scatter_sign[c];
    for (int i = 0; i < d.layout.n_local; ++i)
      if (idx[i] >= 0) rhs(idx[i]) += s(i) * lf(i);
  }
  return rhs;
}

Eigen::VectorXd interpolate_global(const Discretization& d, const Field& v) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d.dofs.n_total);
  for (int c = 0; c < d.mesh.n_cells(); ++c) {
    const Eigen::VectorXd lv = interpolate(d.mesh, c, d.local[c], v);
    const std::vector<int>& idx = d.scatter_index[c];
    const Eigen::VectorXd& s = d.scatter_sign[c];
    // Shared entries agree between neighbors, so plain overwrite is fine.
    for (int i = 0; i < d.layout.n_local; ++i)
      if (idx[i] >= 0) x(idx[i]) = s(i) * lv(i);
  }
  return x;
}

Eigen::SparseMatrix<double> cell_mass(const DofMap& dofs) {
  Eigen::SparseMatrix<double> B(dofs.n_total, dofs.n_total);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(dofs.n_cell);
  for (int i = 0; i < dofs.n_cell; ++i) trip.emplace_back(i, i, 1.0);
  B.setFromTriplets(trip.begin(), trip.end());
  return B;
}

namespace {

// Extract a sub-block of a sparse matrix given contiguous ranges.
Eigen::SparseMatrix<double> block(const Eigen::SparseMatrix<double>& A,
                                  int row0, int rows, int col0, int cols) {
  return A.block(row0, col0, rows, cols);
}

}  // namespace

CondensedSystem::CondensedSystem(const Discretization& d, Eliminate eliminate)
    : eliminated_(eliminate),
      n_cell_(d.dofs.n_cell),
      n_total_(d.dofs.n_total),
      cell_dim_(d.layout.cell_dim) {
  const int ns = d.dofs.n_skeleton;
  if (eliminate == Eliminate::cells) {
    const int cd = d.layout.cell_dim;
    coupling_ = block(d.A, 0, n_cell_, n_cell_, ns);
    // A_cc is block diagonal: cell unknowns of different cells never meet.
    cell_llt_.reserve(d.mesh.n_cells());
    for (int c = 0; c < d.mesh.n_cells(); ++c) {
      Eigen::MatrixXd Acc =
          Eigen::MatrixXd(block(d.A, c * cd, cd, c * cd, cd));
      cell_llt_.emplace_back(Acc);
      if (cell_llt_.back().info() != Eigen::Success)
        throw std::runtime_error("cell block not positive definite");
    }
    // X = A_cc^{-1} A_cs, computed block-row by block-row.
    Eigen::MatrixXd dense_rows;
    std::vector<Eigen::Triplet<double>> trip;
    for (int c = 0; c < d.mesh.n_cells(); ++c) {
      dense_rows = Eigen::MatrixXd(block(coupling_, c * cd, cd, 0, ns));
      dense_rows = cell_llt_[c].solve(dense_rows);
      for (int i = 0; i < cd; ++i)
        for (int j = 0; j < ns; ++j)
          if (dense_rows(i, j) != 0.0)
            trip.emplace_back(c * cd + i, j, dense_rows(i, j));
    }
    Eigen::SparseMatrix<double> X(n_cell_, ns);
    X.setFromTriplets(trip.begin(), trip.end());
    schur_ = block(d.A, n_cell_, ns, n_cell_, ns) -
             Eigen::SparseMatrix<double>(coupling_.transpose() * X);
    schur_.prune(0.0);
  } else {
    coupling_ = block(d.A, n_cell_, ns, 0, n_cell_);
    Eigen::SparseMatrix<double> Ass = block(d.A, n_cell_, ns, n_cell_, ns);
    skel_llt_ = std::make_shared<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>();
    if (ns > 0) {
      skel_llt_->compute(Ass);
      if (skel_llt_->info() != Eigen::Success)
        throw std::runtime_error("skeleton block not positive definite");
      Eigen::MatrixXd X = skel_llt_->solve(Eigen::MatrixXd(coupling_));
      schur_ = (Eigen::MatrixXd(block(d.A, 0, n_cell_, 0, n_cell_)) -
                Eigen::MatrixXd(coupling_).transpose() * X)
                   .sparseView();
    } else {
      schur_ = block(d.A, 0, n_cell_, 0, n_cell_);
    }
  }
}

Eigen::VectorXd CondensedSystem::solve_eliminated(const Eigen::VectorXd& b) const {
  if (eliminated_ == Eliminate::cells) {
    Eigen::VectorXd x(n_cell_);
    for (size_t c = 0; c < cell_llt_.size(); ++c)
      x.segment(c * cell_dim_, cell_dim_) =
          cell_llt_[c].solve(b.segment(c * cell_dim_, cell_dim_));
    return x;
  }
  if (b.size() == 0) return b;
  return skel_llt_->solve(b);
}

Eigen::VectorXd CondensedSystem::reduce_rhs(const Eigen::VectorXd& rhs_full) const {
  const int ns = n_total_ - n_cell_;
  if (eliminated_ == Eliminate::cells) {
    Eigen::VectorXd be = rhs_full.head(n_cell_);
    return rhs_full.tail(ns) - coupling_.transpose() * solve_eliminated(be);
  }
  Eigen::VectorXd be = rhs_full.tail(ns);
  return rhs_full.head(n_cell_) - coupling_.transpose() * solve_eliminated(be);
}

Eigen::VectorXd CondensedSystem::expand(const Eigen::VectorXd& x_kept,
                                        const Eigen::VectorXd& rhs_full) const {
  const int ns = n_total_ - n_cell_;
  Eigen::VectorXd full(n_total_);
  if (eliminated_ == Eliminate::cells) {
    full.tail(ns) = x_kept;
    full.head(n_cell_) =
        solve_eliminated(rhs_full.head(n_cell_) - coupling_ * x_kept);
  } else {
    full.head(n_cell_) = x_kept;
    full.tail(ns) = solve_eliminated(rhs_full.tail(ns) - coupling_ * x_kept);
  }
  return full;
}

Eigen::VectorXd solve_spd(const Eigen::SparseMatrix<double>& A,
                          const Eigen::VectorXd& b) {
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(A);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("matrix is not positive definite");
  Eigen::VectorXd x = llt.solve(b);
  // iterative refinement recovers digits lost to the h^-4 conditioning
  for (int pass = 0; pass < 3; ++pass) {
    const Eigen::VectorXd r = b - A * x;
    if (r.norm() <= 1e-14 * (b.norm() + x.norm())) break;
    x += llt.solve(r);
  }
  const double scale = b.norm() + A.coeffs().cwiseAbs().maxCoeff() * x.norm();
  const double rel = (A * x - b).norm() / std::max(scale, 1e-300);
  if (!(rel <= 1e-12)) {
    std::ostringstream os;
    os << "direct solve residual too large: " << rel;
    throw std::runtime_error(os.str());
  }
  return x;
}

namespace {

void fix_sign(Eigen::VectorXd& x, int n_cell, const Eigen::VectorXd* reference) {
  double dot = 0.0;
  if (reference)
    dot = x.head(n_cell).dot(reference->head(n_cell));
  if (dot == 0.0) {
    for (int i = 0; i < n_cell; ++i)
      if (x(i) != 0.0) {
        dot = x(i);
        break;
      }
  }
  if (dot < 0.0) x = -x;
}

void check_residuals(const Discretization& d, const EigenPairs& pairs) {
  for (size_t j = 0; j < pairs.vectors.size(); ++j) {
    const Eigen::VectorXd& x = pairs.vectors[j];
    Eigen::VectorXd Ax = d.A * x;
    Eigen::VectorXd Bx = Eigen::VectorXd::Zero(x.size());
    Bx.head(d.dofs.n_cell) = x.head(d.dofs.n_cell);
    const double res = (Ax - pairs.values(j) * Bx).norm();
    if (!(res <= 1e-8 * Ax.norm()))
      throw std::runtime_error("eigenpair residual too large at index " +
                               std::to_string(j + 1) + ": " +
                               std::to_string(res / Ax.norm()));
  }
}

EigenPairs gevp_dense(const Discretization& d, int count,
                      const Eigen::VectorXd* reference) {
  CondensedSystem cond(d, Eliminate::skeleton);
  Eigen::MatrixXd S(cond.schur());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("dense eigensolver failed to converge");
  EigenPairs pairs;
  pairs.values = es.eigenvalues().head(count);
  const Eigen::VectorXd zero_rhs = Eigen::VectorXd::Zero(d.dofs.n_total);
  for (int j = 0; j < count; ++j) {
    Eigen::VectorXd x = cond.expand(es.eigenvectors().col(j), zero_rhs);
    x /= x.head(d.dofs.n_cell).norm();  // b_h normalization
    fix_sign(x, d.dofs.n_cell, reference);
    pairs.vectors.push_back(std::move(x));
  }
  return pairs;
}

// Shift-invert subspace iteration on the full pencil A x = lambda B x with
// the singular cell-block mass B. One application x <- (A - tau B)^{-1} B x
// suppresses the skeleton kernel of B; Rayleigh-Ritz in the B-inner product
// delivers the eigenvalues nearest the shift. The preasymptotic spectrum
// contains a large near-degenerate cluster of stabilization-dominated modes,
// so the shift is re-centered at the bottom Ritz value whenever plain
// iteration (tau = 0) stalls.
EigenPairs gevp_sparse(const Discretization& d, int count,
                       const Eigen::VectorXd* reference, unsigned seed) {
  const int n = d.dofs.n_total;
  const int nc = d.dofs.n_cell;
  const int p = std::min(nc, 2 * count + 8);

  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd V(n, p);
  V.setZero();
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < nc; ++i) V(i, j) = gauss(rng);

  Eigen::SparseMatrix<double> B = cell_mass(d.dofs);
  // Number of pencil eigenvalues strictly below t (Sylvester inertia of the
  // shifted matrix); -1 if the factorization hits an eigenvalue.
  auto inertia = [&](double t) -> int {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> f(
        Eigen::SparseMatrix<double>(d.A - t * B));
    if (f.info() != Eigen::Success) return -1;
    return int((f.vectorD().array() < 0.0).count());
  };
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  bool converged = false;
  bool verified = false;
  double tau = 0.0;
  int total_iters = 0;
  for (int attempt = 0; attempt < 3 && !verified; ++attempt) {
  converged = false;
  for (int outer = 0; outer < 6 && !converged; ++outer) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(
        tau == 0.0 ? d.A : Eigen::SparseMatrix<double>(d.A - tau * B));
    if (ldlt.info() != Eigen::Success) {
      // Shift landed on (or too close to) an eigenvalue; nudge it down.
      tau *= 1.0 - 1e-3;
      --outer;
      continue;
    }
    const int inner_max = outer == 0 ? 40 : 60;
    for (int iter = 0; iter < inner_max && !converged; ++iter) {
      ++total_iters;
      Eigen::MatrixXd BV = Eigen::MatrixXd::Zero(n, p);
      BV.topRows(nc) = V.topRows(nc);
      Eigen::MatrixXd W = ldlt.solve(BV);
      // Orthonormalize in the B-inner product via QR of the cell rows.
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(W.topRows(nc));
      Eigen::MatrixXd R =
          qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
      W = R.transpose()
              .triangularView<Eigen::Lower>()
              .solve(W.transpose())
              .transpose();
      // Rayleigh-Ritz on the original pencil; B-projection is the identity.
      Eigen::MatrixXd Ap = W.transpose() * (d.A * W);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(Ap);
      theta = small.eigenvalues();
      V = W * small.eigenvectors();
      // The contract is 1e-8 relative; converge with a safety margin.
      converged = true;
      for (int j = 0; j < count && converged; ++j) {
        Eigen::VectorXd Ax = d.A * V.col(j);
        Eigen::VectorXd r = Ax;
        r.head(nc) -= theta(j) * V.col(j).head(nc);
        converged = r.norm() <= 1e-9 * Ax.norm();
      }
    }
    if (!converged) {
      // Re-center just below the bottom Ritz value; each pass tightens the
      // relative offset, which separates the cluster around lambda(1).
      const double offset = outer == 0 ? 1e-2 : 1e-2 * std::pow(10.0, -outer);
      tau = theta(0) * (1.0 - offset);
    }
  }
  if (!converged)
    throw std::runtime_error(
        "eigensolver stalled after " + std::to_string(total_iters) +
        " shift-invert iterations (last Ritz value " +
        std::to_string(theta(0)) + ", last shift " + std::to_string(tau) + ")");

  // The residual test only certifies eigenpairs, not minimality; verify by
  // inertia counts that no eigenvalue below the reported ones was skipped.
  verified = true;
  for (int j = 0; j < count && verified; ++j) {
    double t = theta(j) * (1.0 - 1e-8);
    int below = inertia(t);
    for (int g = 0; g < 5 && below < 0; ++g) {
      t *= 1.0 - 1e-6;
      below = inertia(t);
    }
    verified = below >= 0 && below <= j;
  }
  if (!verified) {
    // Bracket the missed bottom of the spectrum and re-center the shift
    // there, with a fresh random block.
    double hi = theta(0) * (1.0 - 1e-8);
    double lo = hi;
    for (int g = 0; g < 60; ++g) {
      lo *= 0.5;
      const int m = inertia(lo);
      if (m == 0) break;
      if (m > 0) hi = lo;
    }
    tau = 0.5 * (lo + hi);
    for (int j = 0; j < p; ++j)
      for (int i = 0; i < nc; ++i) V(i, j) = gauss(rng);
  }
  }  // verification attempts
  if (!verified)
    throw std::runtime_error(
        "eigensolver could not certify the smallest eigenvalues (inertia "
        "check keeps failing)");

  EigenPairs pairs;
  pairs.values = theta.head(count);
  for (int j = 0; j < count; ++j) {
    Eigen::VectorXd x = V.col(j);
    x /= x.head(nc).norm();
    fix_sign(x, nc, reference);
    pairs.vectors.push_back(std::move(x));
  }
  return pairs;
}

}  // namespace

EigenPairs solve_gevp(const Discretization& d, int count,
                      const Eigen::VectorXd* reference, unsigned seed) {
  const int available = d.dofs.n_cell;  // rank of the cell-block mass
  if (count < 1) throw std::invalid_argument("eigenpair count must be >= 1");
  if (count > available)
    throw std::invalid_argument(
        "requested " + std::to_string(count) + " eigenpairs but only " +
        std::to_string(available) + " are available on this mesh");
  EigenPairs pairs = (available <= 1500)
                         ? gevp_dense(d, count, reference)
                         : gevp_sparse(d, count, reference, seed);
  check_residuals(d, pairs);
  return pairs;
}

LebResult leb(double lambda_h, double sigma, double h_max) {
  if (!(lambda_h > 0.0) || !(sigma > 0.0) || !(h_max > 0.0))
    throw std::invalid_argument("leb requires positive lambda_h, sigma, h_max");
  const double pi = std::numbers::pi;
  const double c_tr = (2.0 + 3.0 / pi) / pi;
  LebResult r;
  r.alpha = sigma * (1.0 / std::pow(pi, 4) + c_tr / (pi * pi) + c_tr +
                     c_tr * (2.0 / pi + 2.0 / (pi * pi)));
  r.beta = std::pow(h_max, 4) / std::pow(pi, 4);
  r.leb = std::min(1.0, 1.0 / (r.alpha + r.beta * lambda_h)) * lambda_h;
  return r;
}

void write_coordinate(std::ostream& os, const Eigen::SparseMatrix<double>& A) {
  std::ostringstream buf;
  buf.precision(17);
  for (int k = 0; k < A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
      buf << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  os << buf.str();
}

}  // namespace hho
