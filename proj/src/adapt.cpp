#include "hho/adapt.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

namespace hho {

namespace {

void append_field(std::string& line, double v) {
  line.push_back(',');
  if (std::isnan(v)) return;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  line += buf;
}

struct SnapshotTracker {
  const SnapshotFn& fn;
  long last_ndof = 0;

  void maybe(int step, long ndof, const Mesh& mesh) {
    if (!fn) return;
    if (step == 0 || ndof >= 2 * last_ndof) {
      fn(step, mesh);
      last_ndof = ndof;
    }
  }
};

double wall_seconds(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

void write_csv(std::ostream& os, const ConvergenceHistory& history) {
  os << "step,ndof,hmax,eta,energy_err,l2_err,lambda_h,leb,seconds\n";
  for (const HistoryRow& r : history.rows) {
    std::string line = std::to_string(r.step) + "," + std::to_string(r.ndof);
    append_field(line, r.hmax);
    append_field(line, r.eta);
    append_field(line, r.energy_err);
    append_field(line, r.l2_err);
    append_field(line, r.lambda_h);
    append_field(line, r.leb);
    line.push_back(',');  // seconds stays empty for reproducible files
    os << line << '\n';
  }
}

ConvergenceHistory adaptive_source(const RunConfig& config, const ScalarFunc& f,
                                   const SnapshotFn& snapshot) {
  const DofLayout layout = DofLayout::make(config.k, config.ell);
  Mesh mesh = build_initial(config.domain);
  ConvergenceHistory history;
  SnapshotTracker tracker{snapshot};
  for (int step = 0;; ++step) {
    const auto t0 = std::chrono::steady_clock::now();
    Discretization d = assemble(std::move(mesh), layout);
    const Eigen::VectorXd rhs = assemble_load(d, f);
    CondensedSystem cond(d, Eliminate::cells);
    const Eigen::VectorXd u =
        cond.expand(solve_spd(cond.schur(), cond.reduce_rhs(rhs)), rhs);
    const EtaResult eta = eta_source(d, u, f);

    HistoryRow row;
    row.step = step;
    row.ndof = d.dofs.n_total;
    row.hmax = d.mesh.h_max();
    row.eta = eta.value;
    row.seconds = wall_seconds(t0);
    history.rows.push_back(row);
    tracker.maybe(step, row.ndof, d.mesh);
    if (row.ndof >= config.max_ndof) break;

    const std::vector<int> marked =
        dorfler_mark(eta.indicators.cell_totals(), config.theta);
    mesh = refine(d.mesh, marked).mesh;
  }
  return history;
}

ConvergenceHistory uniform_source(const RunConfig& config, const ScalarFunc& f,
                                  const Field* exact,
                                  const SnapshotFn& snapshot) {
  const DofLayout layout = DofLayout::make(config.k, config.ell);
  Mesh mesh = build_initial(config.domain);
  ConvergenceHistory history;
  SnapshotTracker tracker{snapshot};
  for (int step = 0;; ++step) {
    const auto t0 = std::chrono::steady_clock::now();
    Discretization d = assemble(std::move(mesh), layout);
    const Eigen::VectorXd rhs = assemble_load(d, f);
    CondensedSystem cond(d, Eliminate::cells);
    const Eigen::VectorXd u =
        cond.expand(solve_spd(cond.schur(), cond.reduce_rhs(rhs)), rhs);
    const EtaResult eta = eta_source(d, u, f);

    HistoryRow row;
    row.step = step;
    row.ndof = d.dofs.n_total;
    row.hmax = d.mesh.h_max();
    row.eta = eta.value;
    if (exact) {
      const ExactErrors err = exact_errors(d, u, *exact);
      row.energy_err = err.energy;
      row.l2_err = err.l2;
    }
    row.seconds = wall_seconds(t0);
    history.rows.push_back(row);
    tracker.maybe(step, row.ndof, d.mesh);
    if (row.ndof >= config.max_ndof) break;
    mesh = uniform_refine(d.mesh).mesh;
  }
  return history;
}

ConvergenceHistory adaptive_eigen(const RunConfig& config,
                                  const SnapshotFn& snapshot) {
  const DofLayout layout = DofLayout::make(config.k, config.ell);
  const StabVariant variant{StabType::eigen, config.sigma};
  Mesh mesh = build_initial(config.domain);
  ConvergenceHistory history;
  SnapshotTracker tracker{snapshot};
  for (int step = 0;; ++step) {
    const auto t0 = std::chrono::steady_clock::now();
    Discretization d = assemble(std::move(mesh), layout, variant);
    const EigenPairs pairs =
        solve_gevp(d, config.eig_index, nullptr, config.seed);
    const double lambda = pairs.values(config.eig_index - 1);
    const LebResult bound = leb(lambda, config.sigma, d.mesh.h_max());
    const EtaResult eta =
        eta_eigen(d, pairs.vectors[config.eig_index - 1]);

    HistoryRow row;
    row.step = step;
    row.ndof = d.dofs.n_total;
    row.hmax = d.mesh.h_max();
    row.eta = eta.value;
    row.lambda_h = lambda;
    row.leb = bound.leb;
    row.seconds = wall_seconds(t0);
    history.rows.push_back(row);
    tracker.maybe(step, row.ndof, d.mesh);
    if (row.ndof >= config.max_ndof) break;

    if (bound.alpha + bound.beta * lambda > 1.0) {
      mesh = uniform_refine(d.mesh).mesh;
    } else {
      const std::vector<int> marked =
          dorfler_mark(eta.indicators.cell_totals(), config.theta);
      mesh = refine(d.mesh, marked).mesh;
    }
  }
  return history;
}

Field manufactured_solution() {
  const double pi = std::numbers::pi;
  auto s = [pi](double t) { return std::sin(pi * t) * std::sin(pi * t); };
  auto s1 = [pi](double t) { return pi * std::sin(2.0 * pi * t); };
  auto s2 = [pi](double t) { return 2.0 * pi * pi * std::cos(2.0 * pi * t); };
  Field u;
  u.value = [=](const Vec2& x) { return s(x.x()) * s(x.y()); };
  u.grad = [=](const Vec2& x) {
    return Vec2(s1(x.x()) * s(x.y()), s(x.x()) * s1(x.y()));
  };
  u.hess = [=](const Vec2& x) {
    Eigen::Matrix2d H;
    H << s2(x.x()) * s(x.y()), s1(x.x()) * s1(x.y()),
        s1(x.x()) * s1(x.y()), s(x.x()) * s2(x.y());
    return H;
  };
  return u;
}

ScalarFunc manufactured_load() {
  const double pi = std::numbers::pi;
  auto s = [pi](double t) { return std::sin(pi * t) * std::sin(pi * t); };
  auto s2 = [pi](double t) { return 2.0 * pi * pi * std::cos(2.0 * pi * t); };
  auto s4 = [pi](double t) {
    return -8.0 * pi * pi * pi * pi * std::cos(2.0 * pi * t);
  };
  return [=](const Vec2& x) {
    return s4(x.x()) * s(x.y()) + 2.0 * s2(x.x()) * s2(x.y()) +
           s(x.x()) * s4(x.y());
  };
}

}  // namespace hho
