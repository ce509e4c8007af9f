#include "fpreg/error.hpp"
#include "fpreg/fem.hpp"
#include "fpreg/linear_solver.hpp"

#include <doctest.h>

#include <random>

using namespace fpreg;

namespace {

std::shared_ptr<const FeSpace> cylinder_space(double h, int degree) {
  return build_space(std::make_shared<const TriangleMesh>(generate_rect_with_hole(RectWithHole{}, h)), degree);
}

// One Crank-Nicolson system matrix M + S_t + dt/2 (L + S_s) with a Gaussian-mixture-like potential.
SparseOperator cn_matrix(const FeSpace& s, const FeField& v, double dt) {
  const auto m = assemble_mass(s);
  const auto l = assemble_fp_form(s, v);
  const auto [st, ss] = assemble_supg(s, v);
  SparseOperator a;
  a.matrix = m.matrix + st.matrix + 0.5 * dt * (l.matrix + ss.matrix);
  a.symmetric = false;
  return a;
}

}  // namespace

TEST_CASE("identity system") {
  SparseOperator a;
  a.matrix.resize(5, 5);
  a.matrix.setIdentity();
  a.symmetric = true;
  Eigen::VectorXd b(5);
  b << 1, -2, 3, -4, 5;
  for (auto kind : {SolverKind::automatic, SolverKind::direct, SolverKind::bicgstab, SolverKind::cg}) {
    SolveOptions o;
    o.kind = kind;
    CHECK((solve_linear(a, b, o) - b).norm() == 0.0);
  }
}

TEST_CASE("mass matrix with manufactured right-hand side") {
  const auto s = cylinder_space(0.3, 2);
  const auto m = assemble_mass(*s);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(s->num_dofs());
  const Eigen::VectorXd b = m.matrix * ones;
  for (auto kind : {SolverKind::direct, SolverKind::cg, SolverKind::bicgstab}) {
    SolveOptions o;
    o.kind = kind;
    const Eigen::VectorXd x = solve_linear(m, b, o);
    CHECK((x - ones).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(relative_residual(m, x, b) <= 1e-10);
  }
}

TEST_CASE("nonsymmetric Crank-Nicolson matrix: residual verified a posteriori") {
  const auto s = cylinder_space(0.25, 2);
  const auto v = interpolate(s, [](const Vec2& x) { return 0.5 * (x - Vec2(2, 0)).squaredNorm() / 0.2; });
  const auto a = cn_matrix(*s, v, 0.01);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  Eigen::VectorXd b(s->num_dofs());
  for (auto& x : b) x = n(rng);
  for (auto kind : {SolverKind::automatic, SolverKind::direct, SolverKind::bicgstab}) {
    SolveOptions o;
    o.kind = kind;
    LinearSolver solver(o);
    solver.set_matrix(a);
    const Eigen::VectorXd x = solver.solve(b);
    CHECK(relative_residual(a, x, b) <= 1e-10);
    CHECK(solver.last_residual() <= 1e-10);
  }
}

TEST_CASE("stale factorizations precondition nearby matrices") {
  const auto s = cylinder_space(0.25, 2);
  const auto v = interpolate(s, [](const Vec2& x) { return 0.5 * x.squaredNorm(); });
  Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(s->num_dofs(), -1.0, 1.0);
  for (auto kind : {SolverKind::direct, SolverKind::bicgstab}) {
    SolveOptions o;
    o.kind = kind;
    o.stale_iterations = 20;
    LinearSolver solver(o);
    double dt = 0.01;
    for (int k = 0; k < 5; ++k, dt *= 1.02) {
      const auto a = cn_matrix(*s, v, dt);
      solver.set_matrix(a);
      const Eigen::VectorXd x = solver.solve(b);
      CHECK(relative_residual(a, x, b) <= 1e-10);
    }
    // The first matrix is factored; the small dt drift is absorbed by the stale preconditioner.
    CHECK(solver.factorizations() < 5);
  }
}

TEST_CASE("singular systems fail with the achieved residual") {
  SparseOperator a;
  a.matrix.resize(3, 3);
  a.matrix.insert(0, 0) = 1.0;
  a.matrix.insert(1, 1) = 1.0;
  a.matrix.makeCompressed();
  Eigen::VectorXd b = Eigen::VectorXd::Ones(3);
  for (auto kind : {SolverKind::direct, SolverKind::bicgstab}) {
    SolveOptions o;
    o.kind = kind;
    o.max_iter = 50;
    try {
      solve_linear(a, b, o);
      FAIL("expected SolveFailure");
    } catch (const SolveFailure& e) {
      CHECK(e.step() == -1);
      CHECK((std::isnan(e.residual()) || e.residual() > 1e-10));
    }
  }
}

TEST_CASE("backward error measure") {
  SparseOperator a;
  a.matrix.resize(2, 2);
  a.matrix.insert(0, 0) = 2.0;
  a.matrix.insert(1, 1) = 4.0;
  a.matrix.makeCompressed();
  Eigen::VectorXd b(2), x(2);
  b << 2.0, 4.0;
  x << 1.0, 1.5;
  // r = (0, -2); ||A|| = 4, ||x|| = 1.5, ||b|| = 4.
  CHECK(backward_error(a, x, b) == doctest::Approx(2.0 / (4.0 * 1.5 + 4.0)));
  CHECK(relative_residual(a, x, b) == doctest::Approx(2.0 / std::sqrt(20.0)));
}
