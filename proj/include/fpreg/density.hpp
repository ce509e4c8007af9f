#pragma once

#include "fpreg/geometry.hpp"

#include <Eigen/Cholesky>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

namespace fpreg {

/// Gaussian mixture in 2D with cached Cholesky factors and log-normalizers.
class Gmm {
 public:
  Gmm() = default;
  /// Validates weights (nonnegative, summing to 1 within 1e-9, then
  /// renormalized) and covariances (SPD). Throws InvalidFit.
  Gmm(std::vector<double> weights, std::vector<Vec2> means, std::vector<Mat2> covs);

  int k() const { return static_cast<int>(weights_.size()); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<Vec2>& means() const { return means_; }
  const std::vector<Mat2>& covs() const { return covs_; }
  /// -log(2 pi) - 0.5 log det(Sigma_i).
  double log_normalizer(int i) const { return log_norm_[i]; }
  const Eigen::LLT<Mat2>& cholesky(int i) const { return chol_[i]; }

  /// log w_i + log N(x; mu_i, Sigma_i) for every component.
  void component_log_densities(const Vec2& x, std::vector<double>& out) const;

 private:
  std::vector<double> weights_;
  std::vector<Vec2> means_;
  std::vector<Mat2> covs_;
  std::vector<Eigen::LLT<Mat2>> chol_;
  std::vector<double> log_norm_;
};

/// Log-sum-exp stable mixture log density.
double gmm_logpdf(const Gmm& g, const Vec2& x);
double gmm_pdf(const Gmm& g, const Vec2& x);
/// Gradient of V = -log rho: responsibility-weighted sum of Sigma_i^{-1} (x - mu_i).
Vec2 gmm_grad_potential(const Gmm& g, const Vec2& x);

/// iid draws: categorical component, then mu + L z with z standard normal.
std::vector<Vec2> sample(const Gmm& g, std::size_t n, std::uint64_t seed);

struct FitReport {
  std::vector<double> loglik_trace;
  double loglik = 0.0;
  double aic = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Seed of the run that produced the model (after any collapse restarts).
  std::uint64_t seed = 0;
  int restarts = 0;
  /// AIC of every candidate, filled by select_by_aic as (k, aic) pairs.
  std::vector<std::pair<int, double>> aic_by_k;
};

struct EmOptions {
  double cov_reg = 1e-2;
  int max_iter = 500;
  double tol = 1e-8;
  int max_restarts = 5;
};

/// Number of free parameters of a k-component 2D mixture: 6k - 1.
int gmm_parameter_count(int k);
double aic(double loglik, int k);

/// EM with seeded k-means++ initialization; cov_reg * I is added to every
/// covariance in each M-step. The likelihood trace is monotone for cov_reg = 0
/// only: the regularized update is not an ascent step for the likelihood.
/// Throws InvalidFit when k is out of range and CollapseFailure when a
/// component keeps collapsing.
std::pair<Gmm, FitReport> em_fit(const std::vector<Vec2>& points, int k, std::uint64_t seed,
                                 const EmOptions& opts = {});

/// Fits every k in [k_min, k_max] and keeps the smallest AIC, ties going to
/// the smaller k.
std::pair<Gmm, FitReport> select_by_aic(const std::vector<Vec2>& points, int k_min, int k_max, std::uint64_t seed,
                                        const EmOptions& opts = {});

double log_likelihood(const Gmm& g, const std::vector<Vec2>& points);

/// `{"weights":[...],"means":[[x,y],...],"covs":[[[a,b],[b,c]],...]}`
nlohmann::json gmm_to_json(const Gmm& g);
Gmm gmm_from_json(const nlohmann::json& doc);
void write_gmm_json(const Gmm& g, const std::filesystem::path& path);
Gmm read_gmm_json(const std::filesystem::path& path);

/// Isotropic or diagonal single Gaussian as a one-component mixture.
Gmm single_gaussian(const Vec2& mean, const Mat2& cov);

}  // namespace fpreg
