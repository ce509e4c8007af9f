#include "fpreg/error.hpp"
#include "fpreg/fpsolve.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

using namespace fpreg;

namespace {

std::shared_ptr<const FeSpace> box_space(double half_width, double h, int degree) {
  RectWithHole d;
  d.x = {-half_width, half_width};
  d.y = {-half_width, half_width};
  d.hole_radius = 0.0;
  return build_space(std::make_shared<const TriangleMesh>(generate_rect_with_hole(d, h)), degree);
}

std::shared_ptr<const FeSpace> cylinder_space(double h) {
  return build_space(std::make_shared<const TriangleMesh>(generate_rect_with_hole(RectWithHole{}, h)), 2);
}

}  // namespace

TEST_CASE("time grid") {
  const auto g = make_time_grid(5.0, 3000, 1.5);
  REQUIRE(g.times.size() == 3001);
  CHECK(g.times.front() == 0.0);
  CHECK(g.times.back() == 5.0);
  CHECK(g.times[1500] == doctest::Approx(1.7677669529663689).epsilon(1e-14));
  for (int k = 0; k < 3000; ++k) CHECK(g.dt(k) > 0.0);
  const auto u = make_time_grid(2.0, 8, 1.0);
  for (int k = 0; k <= 8; ++k) CHECK(u.times[k] == doctest::Approx(k * 0.25).epsilon(1e-15));
  CHECK(u.nearest_index(0.3) == 1);
  CHECK(u.nearest_index(0.375) == 1);
  CHECK(u.nearest_index(7.0) == 8);
  CHECK_THROWS_AS(make_time_grid(0.0, 3, 1.0), InvalidArgument);
  CHECK_THROWS_AS(make_time_grid(1.0, 0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(make_time_grid(1.0, 3, 0.0), InvalidArgument);
}

TEST_CASE("stationary data stays put up to interpolation error") {
  // The interpolant of exp(-V) is not the discrete equilibrium, so the drift
  // is an interpolation error that vanishes under refinement.
  const Gaussian2D target{Vec2(1.5, 0.5), 0.4 * Mat2::Identity()};
  auto pdf = [&](const Vec2& x) { return target.pdf(x); };
  auto logpdf = [&](const Vec2& x) { return target.logpdf(x); };
  std::vector<double> drift, l1_spread;
  for (double h : {0.4, 0.2}) {
    const auto s = cylinder_space(h);
    const auto v = interpolate(s, [&](const Vec2& x) { return -logpdf(x); });
    FeField rho0 = interpolate(s, pdf);
    rho0.coeffs /= integrate(rho0);
    FpSolveOptions o;
    o.store_every_step = true;
    o.rho_inf = pdf;
    o.log_rho_inf = logpdf;
    const auto traj = solve_fp(rho0, v, make_time_grid(1.0, 100, 1.5), o);
    double worst = 0.0, spread = 0.0;
    for (int k = 0; k <= 100; ++k) {
      worst = std::max(worst, l2_norm(FeField(s, traj.at_step(k).coeffs - rho0.coeffs)));
      spread = std::max(spread, std::abs(traj.diagnostics[k].l1_error - traj.diagnostics[0].l1_error));
      CHECK(std::abs(traj.diagnostics[k].mass - traj.diagnostics[0].mass) <= 1e-8);
    }
    drift.push_back(worst / l2_norm(rho0));
    l1_spread.push_back(spread);
  }
  MESSAGE("relative stationary drift " << drift[0] << " -> " << drift[1] << ", L1 spread " << l1_spread[0] << " -> "
                                       << l1_spread[1]);
  CHECK(drift[1] <= 1e-3);
  CHECK(drift[0] / drift[1] >= std::pow(2.0, 2.5));
  CHECK(l1_spread[1] < l1_spread[0]);
  CHECK(l1_spread[1] <= 1e-4);
}

TEST_CASE("mass is conserved with and without SUPG") {
  const auto s = cylinder_space(0.4);
  const Gaussian2D start{Vec2(-2, 0), 0.2 * Mat2::Identity()};
  const Gaussian2D target{Vec2(2, 0), 0.2 * Mat2::Identity()};
  const auto v = interpolate(s, [&](const Vec2& x) { return -target.logpdf(x); });
  const auto rho0 = interpolate(s, [&](const Vec2& x) { return start.pdf(x); });
  for (bool supg : {true, false}) {
    FpSolveOptions o;
    o.supg = supg;
    o.snapshot_times = {0.5, 2.0};
    const auto traj = solve_fp(rho0, v, make_time_grid(2.0, 60, 1.5), o);
    CHECK(traj.snapshots.size() == 2);
    CHECK(traj.diagnostics.size() == 61);
    for (const auto& row : traj.diagnostics) CHECK(std::abs(row.mass - traj.diagnostics.front().mass) <= 1e-8);
    CHECK(std::isnan(traj.diagnostics.back().l1_error));
  }
}

TEST_CASE("free-space Gaussian benchmark on a coarse P2 mesh") {
  const auto s = box_space(8.0, 0.25, 2);
  const GaussianParams1D px{-2.0, 0.2, 0.2}, py{0.0, 0.2, 0.2};
  const auto v = interpolate(s, [](const Vec2& x) { return 0.5 * x.squaredNorm() / 0.2; });
  const auto g0 = fp_gaussian_product2d(px, py, 0.0);
  const auto rho0 = interpolate(s, [&](const Vec2& x) { return g0.pdf(x); });
  FpSolveOptions o;
  o.snapshot_times = {0.1, 0.5, 1.0};
  const auto grid = make_time_grid(1.0, 300, 1.5);
  const auto traj = solve_fp(rho0, v, grid, o);
  for (int k : traj.snapshot_steps) {
    const auto g = fp_gaussian_product2d(px, py, grid.times[k]);
    const auto exact = [&](const Vec2& x) { return g.pdf(x); };
    const double rel = l2_error(traj.at_step(k), exact) / l2_norm(interpolate(s, exact));
    MESSAGE("t=" << grid.times[k] << " relative L2 " << rel);
    CHECK(rel <= 0.02);
  }
}

TEST_CASE("factorization is reused on a uniform grid") {
  const auto s = cylinder_space(0.5);
  const auto v = interpolate(s, [](const Vec2& x) { return 0.5 * x.squaredNorm(); });
  const auto rho0 = interpolate(s, [](const Vec2& x) { return std::exp(-(x - Vec2(1, 1)).squaredNorm()); });
  FpSolveOptions o;
  o.solver.kind = SolverKind::direct;
  o.solver.stale_iterations = 0;
  const auto traj = solve_fp(rho0, v, make_time_grid(1.0, 20, 1.0), o);
  CHECK(traj.factorizations == 1);
}

TEST_CASE("non-finite data aborts with the step index") {
  const auto s = cylinder_space(0.6);
  const auto v = interpolate(s, [](const Vec2& x) { return 0.5 * x.squaredNorm(); });
  FeField rho0 = interpolate(s, [](const Vec2&) { return 1.0; });
  rho0.coeffs[3] = std::numeric_limits<double>::quiet_NaN();
  try {
    solve_fp(rho0, v, make_time_grid(1.0, 5, 1.0));
    FAIL("expected SolveFailure");
  } catch (const SolveFailure& e) {
    CHECK(e.step() == 1);
  }
  const auto other = cylinder_space(0.6);
  CHECK_THROWS_AS(solve_fp(interpolate(other, [](const Vec2&) { return 1.0; }), v, make_time_grid(1.0, 5, 1.0)),
                  SpaceMismatch);
}

TEST_CASE("diagnostics table and file formats") {
  const auto s = cylinder_space(0.5);
  const Gaussian2D target{Vec2(2, 0), 0.2 * Mat2::Identity()};
  const auto v = interpolate(s, [&](const Vec2& x) { return -target.logpdf(x); });
  const auto rho0 = interpolate(s, [](const Vec2& x) { return std::exp(-2 * (x - Vec2(-2, 0)).squaredNorm()) * 2 / M_PI; });
  FpSolveOptions o;
  o.snapshot_times = {0.0, 0.5, 1.0};
  o.rho_inf = [&](const Vec2& x) { return target.pdf(x); };
  const auto traj = solve_fp(rho0, v, make_time_grid(1.0, 40, 1.5), o);
  const auto rows = diagnostics_report(traj, [&](const Vec2& x) { return target.pdf(x); });
  REQUIRE(rows.size() == 41);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].kl <= rows[i - 1].kl + 1e-8);
  CHECK(rows.front().kl == doctest::Approx(kl_divergence(rho0, [&](const Vec2& x) { return target.pdf(x); }).value));

  const std::string csv = diagnostics_csv(rows);
  CHECK(csv.rfind("k,t,mass,l1_error,kl,min_nodal\n", 0) == 0);
  const auto path = std::filesystem::temp_directory_path() / "fpreg_diag.csv";
  write_diagnostics_csv(rows, path);
  const auto back = read_diagnostics_csv(path);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].k == rows[i].k);
    CHECK(back[i].t == rows[i].t);
    CHECK(back[i].mass == rows[i].mass);
    CHECK(back[i].kl == rows[i].kl);
    CHECK(back[i].l1_error == rows[i].l1_error);
  }
  CHECK(snapshot_filename(42) == "rho_000042.fpfld");
  CHECK(traj.has_step(0));
  CHECK_FALSE(traj.has_step(3));
  CHECK_THROWS_AS(traj.at_step(3), std::out_of_range);
}
