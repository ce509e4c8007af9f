#include "fpreg/boundary.hpp"
#include "fpreg/error.hpp"

#include <doctest.h>

#include <cmath>

using namespace fpreg;

namespace {

std::shared_ptr<const FeSpace> cylinder_space(double h, int degree = 2) {
  return build_space(std::make_shared<const TriangleMesh>(generate_rect_with_hole(RectWithHole{}, h)), degree);
}

}  // namespace

TEST_CASE("raw distance field") {
  const auto s = cylinder_space(0.25);
  const auto w = raw_distance_field(s, 1e-2);
  const auto& bd = s->boundary_dofs();
  for (std::size_t i = 0; i < s->num_dofs(); ++i) {
    const Vec2& x = s->dof_coords()[i];
    CHECK(w.coeffs[i] >= 1e-2);
    if (bd[i]) CHECK(w.coeffs[i] == 1e-2);
    // Near the hole the closest boundary is the circle, approximated by chords
    // whose sagitta is at most h^2 / (8 r).
    if (!bd[i] && x.norm() < 1.0) CHECK(std::abs(w.coeffs[i] - (x.norm() - 0.5)) <= 0.25 * 0.25 / 4.0 + 1e-12);
  }
  // The field at the domain centre line far from the hole.
  const auto at = [&](const Vec2& x) { return evaluate(w, x); };
  CHECK(at({-3.0, 0.0}) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("smoother reproduces constants") {
  const auto s = cylinder_space(0.4);
  SmootherParams p;
  p.tol = 0.3;
  const FeField c(s, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(s->num_dofs()), 0.3));
  const auto out = smooth_distance(c, p);
  CHECK((out.coeffs.array() - 0.3).abs().maxCoeff() <= 1e-8);
}

TEST_CASE("smoother operator") {
  const auto s = cylinder_space(0.5);
  const auto a = assemble_smoother(*s, SmootherParams{});
  const Eigen::SparseMatrix<double> m = a.matrix;
  const Eigen::SparseMatrix<double> d = m - Eigen::SparseMatrix<double>(m.transpose());
  CHECK(d.norm() <= 1e-12 * a.matrix.norm());
  CHECK(a.symmetric);
  // Positive on a random vector.
  Eigen::VectorXd v = Eigen::VectorXd::Random(static_cast<Eigen::Index>(s->num_dofs()));
  CHECK(v.dot(a.matrix * v) > 0.0);
  CHECK_THROWS_AS(assemble_smoother(*cylinder_space(0.5, 1), SmootherParams{}), UnsupportedDegree);
  const auto p1 = cylinder_space(0.5, 1);
  CHECK_THROWS_AS(smooth_distance(raw_distance_field(p1, 1e-2), SmootherParams{}), UnsupportedDegree);
  SmootherParams bad;
  bad.delta = 0.0;
  CHECK_THROWS_AS(assemble_smoother(*s, bad), InvalidArgument);
}

TEST_CASE("smoothing keeps boundary values and reduces gradient jumps") {
  const auto s = cylinder_space(0.2);
  SmootherParams p;
  p.delta = 1e-2;
  p.tol = 1e-2;
  const auto w = raw_distance_field(s, p.tol);
  const auto wd = smooth_distance(w, p);
  const auto& bd = s->boundary_dofs();
  for (std::size_t i = 0; i < s->num_dofs(); ++i)
    if (bd[i]) CHECK(wd.coeffs[i] == p.tol);
  const double before = gradient_jump_seminorm(w);
  const double after = gradient_jump_seminorm(wd);
  MESSAGE("jump seminorm " << before << " -> " << after);
  CHECK(after <= before);
  CHECK(gradient_jump_seminorm(interpolate(s, [](const Vec2& x) { return 2 * x.x() - x.y() + x.x() * x.y(); })) <=
        1e-20);
}

TEST_CASE("regularized potential") {
  const auto s = cylinder_space(0.3);
  const Gmm g = single_gaussian(Vec2(1.5, 0.0), 0.3 * Mat2::Identity());
  const auto w = raw_distance_field(s, 1e-2);
  const auto plain = interpolate(s, [&](const Vec2& x) { return -gmm_logpdf(g, x); });
  CHECK(regularized_potential(g, w, 0.0).coeffs == plain.coeffs);

  const auto v = regularized_potential(g, w, 1e-2);
  const auto& bd = s->boundary_dofs();
  for (std::size_t i = 0; i < s->num_dofs(); ++i)
    if (bd[i]) CHECK(v.coeffs[i] - plain.coeffs[i] == doctest::Approx(1.0).epsilon(1e-12));

  // Larger eps raises the potential everywhere.
  const auto v3 = regularized_potential(g, w, 1e-3);
  CHECK(((v.coeffs - v3.coeffs).array() > 0.0).all());
  CHECK(((v3.coeffs - plain.coeffs).array() > 0.0).all());

  // The barrier pushes away from the hole: its gradient points towards the circle.
  SmootherParams p;
  const auto wd = smooth_distance(w, p);
  const auto vd = regularized_potential(g, wd, 1e-2);
  const FeField barrier(s, vd.coeffs - interpolate(s, [&](const Vec2& x) { return -gmm_logpdf(g, x); }).coeffs);
  for (int j = 0; j < 16; ++j) {
    const double a = 2 * M_PI * (j + 0.5) / 16;
    const Vec2 x = 0.7 * Vec2(std::cos(a), std::sin(a));
    CHECK(evaluate_gradient(barrier, x).dot(x / x.norm()) < 0.0);
  }

  FeField broken = w;
  broken.coeffs[5] = 0.0;
  CHECK_THROWS_AS(regularized_potential(g, broken, 1e-2), InvalidDistanceField);
  CHECK_THROWS_AS(regularized_potential(g, w, -1.0), InvalidArgument);
}
