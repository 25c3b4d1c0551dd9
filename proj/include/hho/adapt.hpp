// Refinement drivers: uniform and adaptive loops for the source problem, the
// manufactured-solution study, and the eigenvalue loop with guaranteed lower
// bounds.

#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <vector>

#include "hho/config.hpp"
#include "hho/estimate.hpp"

namespace hho {

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

struct HistoryRow {
  int step = 0;
  long ndof = 0;
  double hmax = kUnset;
  double eta = kUnset;
  double energy_err = kUnset;
  double l2_err = kUnset;
  double lambda_h = kUnset;
  double leb = kUnset;
  double seconds = kUnset;
};

struct ConvergenceHistory {
  std::vector<HistoryRow> rows;
};

// "step,ndof,hmax,eta,energy_err,l2_err,lambda_h,leb,seconds"; unset fields
// are left empty. The seconds column is always left empty so that repeated
// runs are byte-identical; wall time goes to the summary instead.
void write_csv(std::ostream& os, const ConvergenceHistory& history);

// Invoked with (step, mesh) at step 0 and whenever ndof has doubled.
using SnapshotFn = std::function<void(int, const Mesh&)>;

// Solve/estimate/mark/refine with the Doerfler strategy until ndof exceeds
// the cap; records eta (source estimator) per step. f is the load.
ConvergenceHistory adaptive_source(const RunConfig& config, const ScalarFunc& f,
                                   const SnapshotFn& snapshot = nullptr);

// Uniform refinement of the source problem; with `exact` non-null also
// records energy and L2 errors.
ConvergenceHistory uniform_source(const RunConfig& config, const ScalarFunc& f,
                                  const Field* exact = nullptr,
                                  const SnapshotFn& snapshot = nullptr);

// Eigenvalue loop: uniform refinement while alpha + beta*lambda_h(j) > 1,
// Doerfler marking with the eigen estimator afterwards; records lambda_h(j)
// and LEB(j).
ConvergenceHistory adaptive_eigen(const RunConfig& config,
                                  const SnapshotFn& snapshot = nullptr);

// The manufactured unit-square solution sin^2(pi x) sin^2(pi y) and its load.
Field manufactured_solution();
ScalarFunc manufactured_load();

}  // namespace hho
