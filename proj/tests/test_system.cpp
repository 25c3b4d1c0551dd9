#include <doctest.h>

#include <numbers>
#include <random>
#include <sstream>

#include "hho/system.hpp"
#include "oracles.hpp"

using namespace hho;

TEST_CASE("dof counting on the two-triangle square, k=0") {
  const Mesh mesh = build_initial(Domain::unit_square);
  const DofLayout layout = DofLayout::make(0);
  const DofMap dofs = DofMap::make(mesh, layout);
  CHECK(dofs.n_cell == 12);
  CHECK(dofs.n_total == 14);  // 2*6 cell + 1 facet value + 1 facet normal
  CHECK(dofs.n_skeleton == 2);
}

TEST_CASE("assembled matrix is symmetric and positive definite") {
  Mesh mesh = build_initial(Domain::lshape);
  const Discretization d = assemble(std::move(mesh), DofLayout::make(0));
  const Eigen::MatrixXd A(d.A);
  CHECK((A - A.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("interpolation of a polynomial solves consistently across cells") {
  // shared facet/vertex dofs coming from either neighbor must coincide
  Mesh mesh = uniform_refine(build_initial(Domain::lshape)).mesh;
  const Discretization d = assemble(std::move(mesh), DofLayout::make(1));
  std::mt19937 rng(3);
  const oracle::PolyField p = oracle::random_poly(rng, 3);
  const Eigen::VectorXd x = interpolate_global(d, p.field());
  for (int c = 0; c < d.mesh.n_cells(); ++c) {
    const Eigen::VectorXd local = interpolate(d.mesh, c, d.local[c], p.field());
    const Eigen::VectorXd gathered = d.gather_local(c, x);
    // boundary entries of `gathered` are zero; interior ones must match
    for (int i = 0; i < d.layout.n_local; ++i)
      if (d.scatter_index[c][i] >= 0)
        CHECK(gathered(i) == doctest::Approx(local(i)).epsilon(1e-12));
  }
}

TEST_CASE("condensation: sizes and exactness of both partitions") {
  Mesh mesh = build_initial(Domain::unit_square);
  const Discretization d = assemble(std::move(mesh), DofLayout::make(0));
  const Eigen::VectorXd rhs = assemble_load(d, [](const Vec2& x) {
    return 1.0 + x.x() - 2.0 * x.y();
  });
  const Eigen::VectorXd full = solve_spd(d.A, rhs);

  const CondensedSystem cells(d, Eliminate::cells);
  CHECK(cells.schur().rows() == 2);
  const Eigen::VectorXd xc =
      cells.expand(solve_spd(cells.schur(), cells.reduce_rhs(rhs)), rhs);
  CHECK((xc - full).norm() <= 1e-10 * full.norm());

  const CondensedSystem skel(d, Eliminate::skeleton);
  CHECK(skel.schur().rows() == 12);
  const Eigen::VectorXd xs =
      skel.expand(solve_spd(skel.schur(), skel.reduce_rhs(rhs)), rhs);
  CHECK((xs - full).norm() <= 1e-10 * full.norm());
}

TEST_CASE("condensation exactness on a refined mesh, k=1") {
  Mesh mesh = build_initial(Domain::lshape);
  mesh = uniform_refine(mesh).mesh;
  mesh = uniform_refine(mesh).mesh;
  const Discretization d = assemble(std::move(mesh), DofLayout::make(1));
  const Eigen::VectorXd rhs = assemble_load(d, [](const Vec2&) { return 1.0; });
  const Eigen::VectorXd full = solve_spd(d.A, rhs);
  const CondensedSystem cells(d, Eliminate::cells);
  const Eigen::VectorXd xc =
      cells.expand(solve_spd(cells.schur(), cells.reduce_rhs(rhs)), rhs);
  CHECK((xc - full).norm() <= 1e-10 * full.norm());
}

TEST_CASE("solve_spd contract") {
  Eigen::SparseMatrix<double> A(2, 2);
  A.insert(0, 0) = 2.0;
  A.insert(1, 1) = 3.0;
  A.makeCompressed();
  const Eigen::VectorXd x = solve_spd(A, Eigen::Vector2d(2.0, 3.0));
  CHECK(x(0) == doctest::Approx(1.0));
  CHECK(x(1) == doctest::Approx(1.0));

  std::mt19937 rng(9);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd M(50, 50);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j) M(i, j) = gauss(rng);
  const Eigen::MatrixXd spd =
      M.transpose() * M + Eigen::MatrixXd::Identity(50, 50);
  Eigen::VectorXd b(50);
  for (int i = 0; i < 50; ++i) b(i) = gauss(rng);
  const Eigen::SparseMatrix<double> As = spd.sparseView();
  const Eigen::VectorXd xs = solve_spd(As, b);
  CHECK((As * xs - b).norm() <= 1e-10 * b.norm());

  Eigen::SparseMatrix<double> indef(2, 2);
  indef.insert(0, 0) = 1.0;
  indef.insert(1, 1) = -1.0;
  CHECK_THROWS(solve_spd(indef, Eigen::Vector2d(1.0, 1.0)));
}

TEST_CASE("generalized eigensolve: ordering, residuals, bounds checks") {
  Mesh mesh = build_initial(Domain::unit_square);
  const Discretization d =
      assemble(std::move(mesh), DofLayout::make(0), {StabType::eigen, 0.4086});
  CHECK(d.dofs.n_cell == 12);  // 12 available eigenvalues
  CHECK_THROWS_AS(solve_gevp(d, 13), std::invalid_argument);
  CHECK_THROWS_AS(solve_gevp(d, 0), std::invalid_argument);

  const EigenPairs pairs = solve_gevp(d, 5);
  for (int j = 0; j + 1 < 5; ++j) CHECK(pairs.values(j) <= pairs.values(j + 1));
  CHECK(pairs.values(0) > 0.0);
  for (int j = 0; j < 5; ++j) {
    const Eigen::VectorXd& x = pairs.vectors[j];
    CHECK(x.head(d.dofs.n_cell).norm() == doctest::Approx(1.0));
    Eigen::VectorXd Ax = d.A * x;
    Eigen::VectorXd Bx = Eigen::VectorXd::Zero(x.size());
    Bx.head(d.dofs.n_cell) = x.head(d.dofs.n_cell);
    CHECK((Ax - pairs.values(j) * Bx).norm() <= 1e-8 * Ax.norm());
  }
  // b_h-orthogonality of distinct eigenvectors
  CHECK(std::abs(pairs.vectors[0].head(12).dot(pairs.vectors[1].head(12))) <
        1e-7);
}

TEST_CASE("sparse eigensolver route matches the dense one") {
  Mesh mesh = build_initial(Domain::lshape);
  for (int i = 0; i < 6; ++i) mesh = uniform_refine(mesh).mesh;  // 384 cells
  const Discretization d =
      assemble(std::move(mesh), DofLayout::make(0), {StabType::eigen, 0.4086});
  REQUIRE(d.dofs.n_cell > 1500);  // forces the iterative route
  const EigenPairs pairs = solve_gevp(d, 1);
  const CondensedSystem cond(d, Eliminate::skeleton);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      Eigen::MatrixXd(cond.schur()));
  CHECK(pairs.values(0) ==
        doctest::Approx(es.eigenvalues()(0)).epsilon(1e-7));
}

TEST_CASE("lower-bound formula") {
  const LebResult r = leb(400.0, 0.4086, 1.0);
  CHECK(r.alpha == doctest::Approx(0.75).epsilon(2e-4));
  CHECK(r.alpha / 0.4086 == doctest::Approx(1.8355).epsilon(5e-5));
  CHECK(r.beta == doctest::Approx(std::pow(std::numbers::pi, -4)));

  // alpha + beta*lambda < 1 -> bound equals lambda_h
  const LebResult below = leb(400.0, 0.4086, 0.1);
  CHECK(below.leb == doctest::Approx(400.0));
  // explicit value when the cap is active: alpha=0.75, beta=0.01
  const double h = std::pow(0.01, 0.25) * std::numbers::pi;
  const LebResult capped = leb(400.0, 0.4086, h);
  CHECK(capped.beta == doctest::Approx(0.01));
  CHECK(capped.leb == doctest::Approx(400.0 / (capped.alpha + 4.0)));

  CHECK_THROWS_AS(leb(-1.0, 0.4086, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(leb(400.0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("hessian of the reconstructed interpolant is an orthogonal projection") {
  // ||D^2_pw R_h I_h v||^2 + ||D^2_pw(v - R_h I_h v)||^2 = ||D^2 v||^2
  Mesh mesh = build_initial(Domain::unit_square);
  mesh = uniform_refine(mesh).mesh;
  mesh = uniform_refine(mesh).mesh;
  const Discretization d = assemble(std::move(mesh), DofLayout::make(0));
  // v and its gradient vanish on the boundary, matching the clamped dofs
  oracle::PolyField v;
  const double cx[5] = {0, 0, 1, -2, 1};  // x^2 (1-x)^2
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; b <= 4; ++b) {
      v.expo.push_back({a, b});
    }
  v.coeff.resize(25);
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; b <= 4; ++b) v.coeff(a * 5 + b) = cx[a] * cx[b];
  const Eigen::VectorXd x = interpolate_global(d, v.field());
  double proj2 = 0.0, diff2 = 0.0, full2 = 0.0;
  for (int c = 0; c < d.mesh.n_cells(); ++c) {
    const Eigen::VectorXd rec = d.reconstruct(c, x);
    const MappedRule rule = map_to_cell(cell_rule(16), d.mesh, c);
    const DerivTables t = d.local[c].rec_basis.eval(rule.points, 2);
    const Eigen::VectorXd rxx = t[deriv_index(2, 0)] * rec;
    const Eigen::VectorXd rxy = t[deriv_index(1, 1)] * rec;
    const Eigen::VectorXd ryy = t[deriv_index(0, 2)] * rec;
    for (size_t q = 0; q < rule.points.size(); ++q) {
      const double vxx = v.deriv(rule.points[q], 2, 0);
      const double vxy = v.deriv(rule.points[q], 1, 1);
      const double vyy = v.deriv(rule.points[q], 0, 2);
      const double w = rule.weights(q);
      proj2 += w * (rxx(q) * rxx(q) + 2 * rxy(q) * rxy(q) + ryy(q) * ryy(q));
      full2 += w * (vxx * vxx + 2 * vxy * vxy + vyy * vyy);
      diff2 += w * ((vxx - rxx(q)) * (vxx - rxx(q)) +
                    2 * (vxy - rxy(q)) * (vxy - rxy(q)) +
                    (vyy - ryy(q)) * (vyy - ryy(q)));
    }
  }
  CHECK(proj2 + diff2 == doctest::Approx(full2).epsilon(1e-8));
}

TEST_CASE("coordinate dump format") {
  Eigen::SparseMatrix<double> A(2, 2);
  A.insert(0, 0) = 1.5;
  A.insert(1, 0) = -2.0;
  A.makeCompressed();
  std::ostringstream os;
  write_coordinate(os, A);
  CHECK(os.str() == "0 0 1.5\n1 0 -2\n");
}
