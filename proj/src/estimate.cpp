#include "hho/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hho {

namespace {

std::vector<Eigen::VectorXd> reconstruct_all(const Discretization& d,
                                             const Eigen::VectorXd& u) {
  std::vector<Eigen::VectorXd> rec(d.mesh.n_cells());
  for (int c = 0; c < d.mesh.n_cells(); ++c) rec[c] = d.reconstruct(c, u);
  return rec;
}

struct FacetJumps {
  Eigen::VectorXd mu;     // h^{-3}||[R]||^2 + h^{-1}||[d_n R]||^2
  Eigen::VectorXd extra;  // h||[d_nn R]||^2 + h^3||[d_n Lap R]||^2
};

FacetJumps facet_jumps(const Discretization& d,
                       const std::vector<Eigen::VectorXd>& rec,
                       bool low_order_terms) {
  const Mesh& mesh = d.mesh;
  FacetJumps out;
  out.mu = Eigen::VectorXd::Zero(mesh.n_facets());
  out.extra = Eigen::VectorXd::Zero(mesh.n_facets());
  const QuadratureRule fq = facet_rule(bilinear_exactness(d.layout));
  const int max_order = low_order_terms ? 3 : 1;
  for (int f = 0; f < mesh.n_facets(); ++f) {
    const Facet& facet = mesh.facets[f];
    const MappedRule rule = map_to_facet(fq, mesh, f);
    const Vec2 nu = facet.normal;
    const int nq = static_cast<int>(rule.points.size());
    Eigen::VectorXd val = Eigen::VectorXd::Zero(nq);
    Eigen::VectorXd nder = Eigen::VectorXd::Zero(nq);
    Eigen::VectorXd nnder = Eigen::VectorXd::Zero(nq);
    Eigen::VectorXd nlap = Eigen::VectorXd::Zero(nq);
    for (int side = 0; side < 2; ++side) {
      const int c = side == 0 ? facet.cell_plus : facet.cell_minus;
      if (c < 0) continue;
      const double s = side == 0 ? 1.0 : -1.0;
      const DerivTables t = d.local[c].rec_basis.eval(rule.points, max_order);
      const Eigen::VectorXd& rc = rec[c];
      val += s * t[deriv_index(0, 0)] * rc;
      nder +=
          s * (nu.x() * t[deriv_index(1, 0)] + nu.y() * t[deriv_index(0, 1)]) * rc;
      if (low_order_terms) {
        nnder += s *
                 (nu.x() * nu.x() * t[deriv_index(2, 0)] +
                  2.0 * nu.x() * nu.y() * t[deriv_index(1, 1)] +
                  nu.y() * nu.y() * t[deriv_index(0, 2)]) *
                 rc;
        nlap += s *
                (nu.x() * (t[deriv_index(3, 0)] + t[deriv_index(1, 2)]) +
                 nu.y() * (t[deriv_index(2, 1)] + t[deriv_index(0, 3)])) *
                rc;
      }
    }
    const double h = facet.length;
    const double val2 = val.cwiseAbs2().dot(rule.weights);
    const double nder2 = nder.cwiseAbs2().dot(rule.weights);
    out.mu(f) = val2 / (h * h * h) + nder2 / h;
    if (low_order_terms)
      out.extra(f) = h * nnder.cwiseAbs2().dot(rule.weights) +
                     h * h * h * nlap.cwiseAbs2().dot(rule.weights);
  }
  return out;
}

Eigen::VectorXd stab_energy(const Discretization& d, const Eigen::VectorXd& u) {
  Eigen::VectorXd out(d.mesh.n_cells());
  for (int c = 0; c < d.mesh.n_cells(); ++c) {
    const Eigen::VectorXd lu = d.gather_local(c, u);
    out(c) = lu.dot(d.local[c].stabilization * lu);
  }
  return out;
}

Eigen::VectorXd scatter_facets_to_cells(const Mesh& mesh,
                                        const Eigen::VectorXd& per_facet) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(mesh.n_cells());
  for (int f = 0; f < mesh.n_facets(); ++f) {
    const Facet& facet = mesh.facets[f];
    out(facet.cell_plus) += per_facet(f);
    if (facet.cell_minus >= 0) out(facet.cell_minus) += per_facet(f);
  }
  return out;
}

}  // namespace

Eigen::VectorXd oscillation(const Discretization& d, const ScalarFunc& f) {
  Eigen::VectorXd out(d.mesh.n_cells());
  for (int c = 0; c < d.mesh.n_cells(); ++c) {
    const MappedRule rule =
        map_to_cell(cell_rule(data_exactness(d.layout)), d.mesh, c);
    const Eigen::VectorXd coeff = project(d.local[c].cell_basis, rule, f);
    const Eigen::MatrixXd vals = d.local[c].cell_basis.values(rule.points);
    double r2 = 0.0;
    for (int q = 0; q < static_cast<int>(rule.points.size()); ++q) {
      const double res = f(rule.points[q]) - vals.row(q).dot(coeff);
      r2 += rule.weights(q) * res * res;
    }
    out(c) = std::pow(d.mesh.cells[c].h, 4) * r2;
  }
  return out;
}

Eigen::VectorXd mu_jumps(const Discretization& d, const Eigen::VectorXd& u) {
  return facet_jumps(d, reconstruct_all(d, u), false).mu;
}

EtaResult eta_source(const Discretization& d, const Eigen::VectorXd& u,
                     const ScalarFunc& f) {
  const bool low_order = d.layout.ell == 0;
  const std::vector<Eigen::VectorXd> rec = reconstruct_all(d, u);
  const FacetJumps jumps = facet_jumps(d, rec, low_order);

  EtaResult out;
  out.indicators.jump = scatter_facets_to_cells(d.mesh, jumps.mu);
  out.indicators.stab = stab_energy(d, u);
  out.indicators.osc = oscillation(d, f);
  out.indicators.extra_jump = scatter_facets_to_cells(d.mesh, jumps.extra);
  out.indicators.volume = Eigen::VectorXd::Zero(d.mesh.n_cells());
  if (low_order) {
    for (int c = 0; c < d.mesh.n_cells(); ++c) {
      const MappedRule rule =
          map_to_cell(cell_rule(data_exactness(d.layout)), d.mesh, c);
      const DerivTables t = d.local[c].rec_basis.eval(rule.points, 4);
      const Eigen::VectorXd bilap =
          (t[deriv_index(4, 0)] + 2.0 * t[deriv_index(2, 2)] +
           t[deriv_index(0, 4)]) *
          rec[c];
      double r2 = 0.0;
      for (int q = 0; q < static_cast<int>(rule.points.size()); ++q) {
        const double res = f(rule.points[q]) - bilap(q);
        r2 += rule.weights(q) * res * res;
      }
      out.indicators.volume(c) = std::pow(d.mesh.cells[c].h, 4) * r2;
    }
  }
  out.indicators.global_sq = jumps.mu.sum() + jumps.extra.sum() +
                             out.indicators.stab.sum() +
                             out.indicators.osc.sum() +
                             out.indicators.volume.sum();
  out.value = std::sqrt(out.indicators.global_sq);
  return out;
}

EtaResult eta_eigen(const Discretization& d, const Eigen::VectorXd& u) {
  const FacetJumps jumps = facet_jumps(d, reconstruct_all(d, u), false);
  EtaResult out;
  const int nc = d.mesh.n_cells();
  out.indicators.jump = scatter_facets_to_cells(d.mesh, jumps.mu);
  out.indicators.stab = stab_energy(d, u);
  out.indicators.osc = Eigen::VectorXd::Zero(nc);
  out.indicators.extra_jump = Eigen::VectorXd::Zero(nc);
  out.indicators.volume = Eigen::VectorXd::Zero(nc);
  out.indicators.global_sq = jumps.mu.sum() + out.indicators.stab.sum();
  out.value = std::sqrt(out.indicators.global_sq);
  return out;
}

ExactErrors exact_errors(const Discretization& d, const Eigen::VectorXd& u,
                         const Field& exact) {
  double energy2 = 0.0, l22 = 0.0;
  for (int c = 0; c < d.mesh.n_cells(); ++c) {
    const MappedRule rule =
        map_to_cell(cell_rule(data_exactness(d.layout)), d.mesh, c);
    const Eigen::VectorXd rec = d.reconstruct(c, u);
    const DerivTables t = d.local[c].rec_basis.eval(rule.points, 2);
    const Eigen::VectorXd rxx = t[deriv_index(2, 0)] * rec;
    const Eigen::VectorXd rxy = t[deriv_index(1, 1)] * rec;
    const Eigen::VectorXd ryy = t[deriv_index(0, 2)] * rec;
    for (int q = 0; q < static_cast<int>(rule.points.size()); ++q) {
      const Eigen::Matrix2d H = exact.hess(rule.points[q]);
      const double exx = H(0, 0) - rxx(q);
      const double exy = H(0, 1) - rxy(q);
      const double eyy = H(1, 1) - ryy(q);
      energy2 += rule.weights(q) * (exx * exx + 2.0 * exy * exy + eyy * eyy);
    }
    const Eigen::VectorXd proj =
        project(d.local[c].cell_basis, rule, exact.value);
    const Eigen::VectorXd diff =
        proj - u.segment(d.dofs.cell_off(c), d.layout.cell_dim);
    l22 += diff.squaredNorm();  // orthonormal cell basis
  }
  return {std::sqrt(energy2), std::sqrt(l22)};
}

std::vector<int> dorfler_mark(const Eigen::VectorXd& indicators_sq,
                              double theta) {
  if (!(theta > 0.0) || !(theta <= 1.0))
    throw std::invalid_argument("bulk parameter theta must lie in (0, 1]");
  const double total = indicators_sq.sum();
  std::vector<int> order(indicators_sq.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (indicators_sq(a) != indicators_sq(b))
      return indicators_sq(a) > indicators_sq(b);
    return a < b;
  });
  std::vector<int> marked;
  double acc = 0.0;
  const double target = theta * total * (1.0 - 1e-12);
  for (int c : order) {
    if (acc >= target || indicators_sq(c) == 0.0) break;
    marked.push_back(c);
    acc += indicators_sq(c);
  }
  return marked;
}

std::vector<double> eoc(const std::vector<double>& errors,
                        const std::vector<double>& abscissae) {
  if (errors.size() != abscissae.size())
    throw std::invalid_argument("eoc: mismatched series lengths");
  std::vector<double> rates;
  for (size_t i = 0; i + 1 < errors.size(); ++i)
    rates.push_back(std::log(errors[i] / errors[i + 1]) /
                    std::log(abscissae[i + 1] / abscissae[i]));
  return rates;
}

}  // namespace hho
