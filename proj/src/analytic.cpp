#include "fpreg/analytic.hpp"

#include "fpreg/error.hpp"
#include "fpreg/quadrature.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <numbers>

namespace fpreg {

MeanVar fp_gaussian_1d(const GaussianParams1D& p, double t) {
  if (!(t >= 0.0)) throw InvalidArgument("time must be nonnegative");
  const double decay = std::exp(-t / p.sigma2);
  // e^{-2t/s2}(g2 + s2(e^{2t/s2} - 1)) rewritten without the growing exponential.
  const double var = decay * decay * p.gamma2 + p.sigma2 * (1.0 - decay * decay);
  return {decay * p.mu, var};
}

MeanVar mccann_gaussian_1d(double mu, double gamma, double sigma, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("McCann interpolation time must lie in [0, 1]");
  const double s = (1.0 - t) * gamma + t * sigma;
  return {(1.0 - t) * mu, s * s};
}

double Gaussian2D::logpdf(const Vec2& x) const {
  const Eigen::LLT<Mat2> llt(cov);
  const Mat2& l = llt.matrixLLT();
  const Vec2 z = llt.matrixL().solve(x - mean);
  return -std::log(2.0 * std::numbers::pi) - std::log(l(0, 0)) - std::log(l(1, 1)) - 0.5 * z.squaredNorm();
}

double Gaussian2D::pdf(const Vec2& x) const { return std::exp(logpdf(x)); }

Gaussian2D fp_gaussian_product2d(const GaussianParams1D& px, const GaussianParams1D& py, double t) {
  const auto a = fp_gaussian_1d(px, t);
  const auto b = fp_gaussian_1d(py, t);
  Gaussian2D g;
  g.mean = Vec2(a.mean, b.mean);
  g.cov << a.var, 0.0, 0.0, b.var;
  return g;
}

namespace {

double kl_integrand(double rho, double log_target, long& clipped) {
  if (rho <= 0.0) {
    ++clipped;
    return 0.0;
  }
  return rho * (std::log(rho) - log_target);
}

}  // namespace

DensityMetrics::DensityMetrics(std::shared_ptr<const FeSpace> space, const PointFunction& rho_inf,
                               const PointFunction& log_rho_inf)
    : space_(std::move(space)) {
  const auto& fe = *space_;
  const auto& mesh = fe.mesh();
  const auto rule = triangle_rule(2 * fe.degree() + 2);
  nq_ = static_cast<int>(rule.size());
  const int n = fe.dofs_per_cell();
  basis_.resize(nq_, n);
  std::array<double, 6> phi{};
  for (int q = 0; q < nq_; ++q) {
    basis_values(fe.degree(), rule[q].bary, phi);
    for (int i = 0; i < n; ++i) basis_(q, i) = phi[i];
  }
  const auto total = static_cast<Eigen::Index>(fe.num_cells() * nq_);
  qweight_.resize(total);
  target_.resize(total);
  log_target_.resize(total);
  for (std::size_t t = 0; t < fe.num_cells(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const double area = fe.geometry(static_cast<int>(t)).area;
    for (int q = 0; q < nq_; ++q) {
      const auto idx = static_cast<Eigen::Index>(t * nq_ + q);
      const auto& b = rule[q].bary;
      const Vec2 x = b[0] * mesh.vertices()[tri[0]] + b[1] * mesh.vertices()[tri[1]] + b[2] * mesh.vertices()[tri[2]];
      qweight_[idx] = rule[q].weight * area;
      target_[idx] = rho_inf(x);
      log_target_[idx] = log_rho_inf ? log_rho_inf(x) : std::log(target_[idx]);
    }
  }
}

DensityMetrics::Values DensityMetrics::evaluate(const Eigen::VectorXd& coeffs) const {
  const auto& fe = *space_;
  const int n = fe.dofs_per_cell();
  Values out;
  Eigen::VectorXd local(n);
  for (std::size_t t = 0; t < fe.num_cells(); ++t) {
    const auto dofs = fe.cell_dofs(static_cast<int>(t));
    for (int i = 0; i < n; ++i) local[i] = coeffs[dofs[i]];
    const Eigen::VectorXd vals = basis_ * local;
    for (int q = 0; q < nq_; ++q) {
      const auto idx = static_cast<Eigen::Index>(t * nq_ + q);
      const double w = qweight_[idx];
      out.kl += w * kl_integrand(vals[q], log_target_[idx], out.clipped);
      out.l1 += w * std::abs(vals[q] - target_[idx]);
    }
  }
  return out;
}

KlResult kl_divergence(const FeField& rho, const PointFunction& rho_inf, const PointFunction& log_rho_inf) {
  const auto v = DensityMetrics(rho.space, rho_inf, log_rho_inf).evaluate(rho.coeffs);
  return {v.kl, v.clipped};
}

double l1_error(const FeField& rho, const PointFunction& rho_inf) {
  return DensityMetrics(rho.space, rho_inf).evaluate(rho.coeffs).l1;
}

double pinsker_gap(const FeField& rho, const PointFunction& rho_inf) {
  const auto v = DensityMetrics(rho.space, rho_inf).evaluate(rho.coeffs);
  return std::sqrt(2.0 * std::max(v.kl, 0.0)) - v.l1;
}

namespace {

template <class F>
void for_each_point(const TriangleMesh& mesh, int rule_degree, F&& f) {
  const auto rule = triangle_rule(rule_degree);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const double area = mesh.signed_area(static_cast<int>(t));
    for (const auto& q : rule) {
      const auto& b = q.bary;
      f(b[0] * mesh.vertices()[tri[0]] + b[1] * mesh.vertices()[tri[1]] + b[2] * mesh.vertices()[tri[2]],
        q.weight * area);
    }
  }
}

}  // namespace

KlResult kl_divergence(const TriangleMesh& mesh, const PointFunction& rho, const PointFunction& rho_inf,
                       int rule_degree) {
  KlResult out;
  for_each_point(mesh, rule_degree, [&](const Vec2& x, double w) {
    out.value += w * kl_integrand(rho(x), std::log(rho_inf(x)), out.clipped);
  });
  return out;
}

double l1_error(const TriangleMesh& mesh, const PointFunction& rho, const PointFunction& rho_inf, int rule_degree) {
  double sum = 0.0;
  for_each_point(mesh, rule_degree, [&](const Vec2& x, double w) { sum += w * std::abs(rho(x) - rho_inf(x)); });
  return sum;
}

}  // namespace fpreg
