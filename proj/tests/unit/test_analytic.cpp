#include "fpreg/analytic.hpp"
#include "fpreg/error.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace fpreg;

namespace {

// Omega = (-1, 1) embedded as the strip (-1, 1) x (0, 1); a grid line sits on x = 0.
const TriangleMesh& strip() {
  static const TriangleMesh m = [] {
    RectWithHole d;
    d.x = {-1.0, 1.0};
    d.y = {0.0, 1.0};
    d.hole_radius = 0.0;
    return generate_rect_with_hole(d, 0.25);
  }();
  return m;
}

double half(const Vec2&) { return 0.5; }
double step(const Vec2& x) { return x.x() < 0.0 ? 0.1 : 0.9; }

}  // namespace

TEST_CASE("Gaussian Fokker-Planck solution in one dimension") {
  const GaussianParams1D p{-2.0, 0.2, 0.2};
  const auto t0 = fp_gaussian_1d(p, 0.0);
  CHECK(t0.mean == -2.0);
  CHECK(t0.var == doctest::Approx(0.2));
  const auto late = fp_gaussian_1d({1.5, 0.7, 0.3}, 50 * 0.3);
  CHECK(std::abs(late.mean) <= 1e-10);
  CHECK(std::abs(late.var - 0.3) <= 1e-10);
  const auto mid = fp_gaussian_1d(p, 0.2);
  CHECK(mid.mean == doctest::Approx(-2.0 * std::exp(-1.0)).epsilon(1e-14));
  CHECK(mid.mean == doctest::Approx(-0.735758882).epsilon(1e-9));
  CHECK(mid.var == doctest::Approx(0.2).epsilon(1e-14));
  // Stationarity fixed point gamma^2 = sigma^2.
  for (double t : {0.01, 0.3, 2.0, 7.5}) CHECK(fp_gaussian_1d({0.4, 0.25, 0.25}, t).var == doctest::Approx(0.25).epsilon(1e-13));
  CHECK_THROWS_AS(fp_gaussian_1d(p, -1.0), InvalidArgument);
}

TEST_CASE("McCann interpolation") {
  const double g = std::sqrt(0.2);
  const auto a = mccann_gaussian_1d(-2.0, g, g, 0.0);
  CHECK(a.mean == -2.0);
  CHECK(a.var == doctest::Approx(0.2));
  const auto b = mccann_gaussian_1d(-2.0, g, 0.5, 1.0);
  CHECK(b.mean == 0.0);
  CHECK(b.var == doctest::Approx(0.25));
  const auto c = mccann_gaussian_1d(-2.0, g, g, 0.5);
  CHECK(c.mean == doctest::Approx(-1.0));
  CHECK(c.var == doctest::Approx(0.2));
  CHECK_THROWS_AS(mccann_gaussian_1d(-2.0, g, g, 1.5), InvalidArgument);
  CHECK_THROWS_AS(mccann_gaussian_1d(-2.0, g, g, -0.1), InvalidArgument);
}

TEST_CASE("Fokker-Planck and McCann means differ at intermediate times") {
  // The FP mean decays exponentially, the geodesic moves at constant speed.
  const GaussianParams1D p{-2.0, 0.2, 0.2};
  CHECK(fp_gaussian_1d(p, 0.0).mean == mccann_gaussian_1d(-2.0, std::sqrt(0.2), std::sqrt(0.2), 0.0).mean);
  const double s = 0.5;
  const double t_fp = -0.2 * std::log(1.0 - s);  // FP time at which the mean has covered half the distance
  CHECK(fp_gaussian_1d(p, t_fp).mean == doctest::Approx(-1.0));
  CHECK(std::abs(fp_gaussian_1d(p, 0.5 * t_fp).mean - mccann_gaussian_1d(-2.0, 0.4472, 0.4472, 0.25).mean) > 1e-3);
}

TEST_CASE("2D product solution") {
  const GaussianParams1D px{-2.0, 0.2, 0.2}, py{0.0, 0.2, 0.2};
  for (double t : {0.0, 0.1, 1.0}) {
    const auto g = fp_gaussian_product2d(px, py, t);
    CHECK(g.cov(0, 0) == doctest::Approx(g.cov(1, 1)));
    CHECK(g.cov(0, 1) == 0.0);
  }
  const auto g0 = fp_gaussian_product2d(px, py, 0.0);
  CHECK(g0.mean == Vec2(-2.0, 0.0));
  CHECK(g0.pdf({-2.0, 0.0}) == doctest::Approx(1.0 / (2 * M_PI * 0.2)));
  CHECK(std::log(g0.pdf({-1.5, 0.3})) == doctest::Approx(g0.logpdf({-1.5, 0.3})));

  // Marginal in x by trapezoidal quadrature in y equals the 1D density.
  const GaussianParams1D qx{1.0, 0.5, 0.3}, qy{-0.5, 0.1, 0.4};
  const double t = 0.4;
  const auto g = fp_gaussian_product2d(qx, qy, t);
  const auto mx = fp_gaussian_1d(qx, t);
  for (double x : {-0.5, 0.2, 1.1}) {
    double s = 0.0;
    const int n = 4000;
    const double lo = -8.0, hi = 8.0, h = (hi - lo) / n;
    for (int i = 0; i <= n; ++i) s += (i == 0 || i == n ? 0.5 : 1.0) * g.pdf({x, lo + i * h});
    const double exact = std::exp(-0.5 * (x - mx.mean) * (x - mx.mean) / mx.var) / std::sqrt(2 * M_PI * mx.var);
    CHECK(s * h == doctest::Approx(exact).epsilon(1e-10));
  }
}

TEST_CASE("KL asymmetry example on a step density") {
  const auto forward = kl_divergence(strip(), half, step, 4);
  const auto backward = kl_divergence(strip(), step, half, 4);
  CHECK(std::abs(forward.value - 0.5108) <= 1e-3);
  CHECK(std::abs(backward.value - 0.3681) <= 1e-3);
  CHECK(forward.clipped == 0);
  const double l1 = l1_error(strip(), half, step, 4);
  CHECK(l1 == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(std::sqrt(2 * forward.value) - l1 == doctest::Approx(std::sqrt(2 * 0.5108) - 0.8).epsilon(1e-3));
  CHECK(std::sqrt(2 * forward.value) - l1 >= 0.0);
}

TEST_CASE("metrics on finite-element fields") {
  RectWithHole d;
  d.x = {-5, 5};
  d.y = {-5, 5};
  d.hole_radius = 0.0;
  const auto mesh = std::make_shared<const TriangleMesh>(generate_rect_with_hole(d, 0.4));
  const auto s = build_space(mesh, 2);
  const Gaussian2D target{Vec2(0.5, 0), 0.6 * Mat2::Identity()};
  const auto rho_inf = interpolate(s, [&](const Vec2& x) { return target.pdf(x); });
  auto as_function = [](const FeField& f) { return [f](const Vec2& x) { return evaluate(f, x); }; };

  // rho = rho_inf evaluated consistently through the same interpolant.
  CHECK(std::abs(kl_divergence(rho_inf, as_function(rho_inf)).value) <= 1e-10);
  CHECK(l1_error(rho_inf, as_function(rho_inf)) <= 1e-12);
  CHECK(std::abs(pinsker_gap(rho_inf, as_function(rho_inf))) <= 1e-6);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto random_density = [&] {
    const Gaussian2D g{Vec2(u(rng), u(rng)), (0.5 + 0.3 * u(rng)) * Mat2::Identity()};
    return interpolate(s, [g](const Vec2& x) { return g.pdf(x); });
  };
  auto target_fn = [&](const Vec2& x) { return target.pdf(x); };
  auto log_target = [&](const Vec2& x) { return target.logpdf(x); };
  for (int trial = 0; trial < 5; ++trial) {
    const FeField r0 = random_density(), r1 = random_density(), r2 = random_density();
    // Convexity with lambda = 0.3.
    const FeField mix(s, 0.3 * r0.coeffs + 0.7 * r1.coeffs);
    const double lhs = kl_divergence(mix, target_fn, log_target).value;
    const double rhs = 0.3 * kl_divergence(r0, target_fn, log_target).value + 0.7 * kl_divergence(r1, target_fn, log_target).value;
    CHECK(lhs <= rhs + 1e-12);
    // Triangle inequality for L1.
    const double a = l1_error(r0, as_function(r1)), b = l1_error(r1, as_function(r2)), c = l1_error(r0, as_function(r2));
    CHECK(c <= a + b + 1e-9);
    CHECK(kl_divergence(r0, target_fn, log_target).value >= -1e-10);
    CHECK(pinsker_gap(r0, target_fn) >= -1e-8);
  }

  // Negative values are clipped and counted.
  FeField neg(s, -Eigen::VectorXd::Ones(s->num_dofs()));
  const auto kr = kl_divergence(neg, target_fn);
  CHECK(kr.clipped > 0);
  CHECK(kr.value == 0.0);

  // The precomputed evaluator agrees with the direct metrics.
  const DensityMetrics metrics(s, target_fn, log_target);
  const FeField r = random_density();
  const auto v = metrics.evaluate(r.coeffs);
  CHECK(v.kl == doctest::Approx(kl_divergence(r, target_fn, log_target).value).epsilon(1e-12));
  CHECK(v.l1 == doctest::Approx(l1_error(r, target_fn)).epsilon(1e-12));
}
