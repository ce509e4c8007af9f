#pragma once

#include "fpreg/fem.hpp"

#include <memory>
#include <utility>

namespace fpreg {

/// rho0 = N(mu, gamma2), rho_inf = N(0, sigma2) on the real line.
struct GaussianParams1D {
  double mu = 0.0;
  double gamma2 = 1.0;
  double sigma2 = 1.0;
};

struct MeanVar {
  double mean;
  double var;
};

/// Closed-form Fokker-Planck solution for Gaussian data:
/// mean e^{-t/s2} mu, variance e^{-2t/s2} (g2 + s2 (e^{2t/s2} - 1)).
MeanVar fp_gaussian_1d(const GaussianParams1D& p, double t);

/// Wasserstein geodesic between N(mu, gamma^2) and N(0, sigma^2); t in [0, 1].
MeanVar mccann_gaussian_1d(double mu, double gamma, double sigma, double t);

struct Gaussian2D {
  Vec2 mean;
  Mat2 cov;

  double pdf(const Vec2& x) const;
  double logpdf(const Vec2& x) const;
};

/// Coordinatewise product of two 1D solutions (separable potential).
Gaussian2D fp_gaussian_product2d(const GaussianParams1D& px, const GaussianParams1D& py, double t);

struct KlResult {
  double value = 0.0;
  /// Quadrature points where rho <= 0 and the integrand was set to 0.
  long clipped = 0;
};

/// int rho log(rho / rho_inf) by elementwise Gauss quadrature exact to
/// degree 2k+2. `log_rho_inf` is used when given (robust far from the mass);
/// otherwise log(rho_inf) is taken pointwise.
KlResult kl_divergence(const FeField& rho, const PointFunction& rho_inf, const PointFunction& log_rho_inf = nullptr);
double l1_error(const FeField& rho, const PointFunction& rho_inf);
/// sqrt(2 KL) - L1; nonnegative for genuine densities.
double pinsker_gap(const FeField& rho, const PointFunction& rho_inf);

/// Same metrics for two pointwise functions on a mesh, with the given rule.
KlResult kl_divergence(const TriangleMesh& mesh, const PointFunction& rho, const PointFunction& rho_inf,
                       int rule_degree);
double l1_error(const TriangleMesh& mesh, const PointFunction& rho, const PointFunction& rho_inf, int rule_degree);

/// Precomputed quadrature data for evaluating KL and L1 of many fields on
/// one space against a fixed target.
class DensityMetrics {
 public:
  DensityMetrics(std::shared_ptr<const FeSpace> space, const PointFunction& rho_inf,
                 const PointFunction& log_rho_inf = nullptr);

  struct Values {
    double kl = 0.0;
    double l1 = 0.0;
    long clipped = 0;
  };
  Values evaluate(const Eigen::VectorXd& coeffs) const;

  const FeSpace& space() const { return *space_; }

 private:
  std::shared_ptr<const FeSpace> space_;
  int nq_ = 0;
  Eigen::MatrixXd basis_;  // nq x dofs_per_cell
  Eigen::VectorXd qweight_;  // per cell and point, area included
  Eigen::VectorXd target_, log_target_;
};

}  // namespace fpreg
