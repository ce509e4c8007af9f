#include "fpreg/density.hpp"

#include "fpreg/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

namespace fpreg {

namespace {

double log_sum_exp(const std::vector<double>& a) {
  const double m = *std::max_element(a.begin(), a.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : a) s += std::exp(v - m);
  return m + std::log(s);
}

// Inverse-CDF draw from unnormalized nonnegative weights.
std::size_t draw_index(const std::vector<double>& w, double u) {
  double total = 0.0;
  for (double v : w) total += v;
  double target = u * total, acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    if (target < acc) return i;
  }
  for (std::size_t i = w.size(); i-- > 0;)
    if (w[i] > 0.0) return i;
  return w.size() - 1;
}

struct Collapsed {};

}  // namespace

Gmm::Gmm(std::vector<double> weights, std::vector<Vec2> means, std::vector<Mat2> covs)
    : weights_(std::move(weights)), means_(std::move(means)), covs_(std::move(covs)) {
  if (weights_.empty()) throw InvalidFit("mixture needs at least one component");
  if (weights_.size() != means_.size() || weights_.size() != covs_.size())
    throw InvalidFit("weights, means and covariances differ in length");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidFit("mixture weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidFit("mixture weights do not sum to 1");
  for (double& w : weights_) w /= total;
  for (const auto& c : covs_) {
    if (!c.allFinite() || std::abs(c(0, 1) - c(1, 0)) > 1e-12 * (1.0 + c.cwiseAbs().maxCoeff()))
      throw InvalidFit("covariance is not symmetric");
    Mat2 sym = 0.5 * (c + c.transpose());
    Eigen::LLT<Mat2> llt(sym);
    if (llt.info() != Eigen::Success || !(sym.determinant() > 0.0))
      throw InvalidFit("covariance is not positive definite");
    chol_.push_back(llt);
    const Mat2& l = llt.matrixLLT();
    log_norm_.push_back(-std::log(2.0 * std::numbers::pi) - std::log(l(0, 0)) - std::log(l(1, 1)));
  }
}

void Gmm::component_log_densities(const Vec2& x, std::vector<double>& out) const {
  out.resize(weights_.size());
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const Vec2 z = chol_[i].matrixL().solve(x - means_[i]);
    out[i] = std::log(weights_[i]) + log_norm_[i] - 0.5 * z.squaredNorm();
  }
}

double gmm_logpdf(const Gmm& g, const Vec2& x) {
  std::vector<double> lp;
  g.component_log_densities(x, lp);
  return log_sum_exp(lp);
}

double gmm_pdf(const Gmm& g, const Vec2& x) { return std::exp(gmm_logpdf(g, x)); }

Vec2 gmm_grad_potential(const Gmm& g, const Vec2& x) {
  std::vector<double> lp;
  g.component_log_densities(x, lp);
  const double total = log_sum_exp(lp);
  Vec2 grad = Vec2::Zero();
  for (int i = 0; i < g.k(); ++i) {
    const double r = std::exp(lp[i] - total);
    if (r == 0.0) continue;
    grad += r * g.cholesky(i).solve(x - g.means()[i]);
  }
  return grad;
}

std::vector<Vec2> sample(const Gmm& g, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vec2> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t i = g.k() == 1 ? 0 : draw_index(g.weights(), uniform(rng));
    const double z0 = normal(rng);
    const double z1 = normal(rng);
    out.push_back(g.means()[i] + g.cholesky(static_cast<int>(i)).matrixL() * Vec2(z0, z1));
  }
  return out;
}

int gmm_parameter_count(int k) { return 6 * k - 1; }

double aic(double loglik, int k) { return 2.0 * gmm_parameter_count(k) - 2.0 * loglik; }

double log_likelihood(const Gmm& g, const std::vector<Vec2>& points) {
  double sum = 0.0;
  for (const auto& x : points) sum += gmm_logpdf(g, x);
  return sum;
}

namespace {

std::vector<Vec2> kmeans_pp(const std::vector<Vec2>& pts, int k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<Vec2> centers;
  std::vector<double> d2(pts.size(), 1.0);
  centers.push_back(pts[draw_index(d2, uniform(rng))]);
  for (std::size_t i = 0; i < pts.size(); ++i) d2[i] = (pts[i] - centers[0]).squaredNorm();
  while (static_cast<int>(centers.size()) < k) {
    const bool degenerate = std::all_of(d2.begin(), d2.end(), [](double v) { return v == 0.0; });
    const std::size_t pick = degenerate ? draw_index(std::vector<double>(pts.size(), 1.0), uniform(rng))
                                        : draw_index(d2, uniform(rng));
    centers.push_back(pts[pick]);
    for (std::size_t i = 0; i < pts.size(); ++i) d2[i] = std::min(d2[i], (pts[i] - centers.back()).squaredNorm());
  }
  return centers;
}

// resp is n x k.
Gmm m_step(const std::vector<Vec2>& pts, const Eigen::MatrixXd& resp, double cov_reg) {
  const int k = static_cast<int>(resp.cols());
  const double n = static_cast<double>(pts.size());
  std::vector<double> w(k);
  std::vector<Vec2> mu(k);
  std::vector<Mat2> cov(k);
  for (int j = 0; j < k; ++j) {
    const double nk = resp.col(j).sum();
    if (nk / n < 1e-8) throw Collapsed{};
    Vec2 m = Vec2::Zero();
    for (std::size_t i = 0; i < pts.size(); ++i) m += resp(static_cast<Eigen::Index>(i), j) * pts[i];
    m /= nk;
    Mat2 c = Mat2::Zero();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Vec2 d = pts[i] - m;
      c += resp(static_cast<Eigen::Index>(i), j) * d * d.transpose();
    }
    c /= nk;
    c(0, 1) = c(1, 0) = 0.5 * (c(0, 1) + c(1, 0));
    c += cov_reg * Mat2::Identity();
    if (!(c.determinant() > 1e-300) || !(c(0, 0) > 0.0)) throw Collapsed{};
    w[j] = nk / n;
    mu[j] = m;
    cov[j] = c;
  }
  double total = 0.0;
  for (double v : w) total += v;
  for (double& v : w) v /= total;
  return Gmm(std::move(w), std::move(mu), std::move(cov));
}

// Returns the log-likelihood and fills responsibilities.
double e_step(const Gmm& g, const std::vector<Vec2>& pts, Eigen::MatrixXd& resp) {
  std::vector<double> lp;
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    g.component_log_densities(pts[i], lp);
    const double l = log_sum_exp(lp);
    total += l;
    for (int j = 0; j < g.k(); ++j) resp(static_cast<Eigen::Index>(i), j) = std::exp(lp[j] - l);
  }
  return total;
}

std::pair<Gmm, FitReport> em_once(const std::vector<Vec2>& pts, int k, std::uint64_t seed, const EmOptions& opts) {
  std::mt19937_64 rng(seed);
  const auto centers = kmeans_pp(pts, k, rng);
  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pts.size()), k);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    int best = 0;
    for (int j = 1; j < k; ++j)
      if ((pts[i] - centers[j]).squaredNorm() < (pts[i] - centers[best]).squaredNorm()) best = j;
    resp(static_cast<Eigen::Index>(i), best) = 1.0;
  }
  Gmm g = m_step(pts, resp, opts.cov_reg);
  FitReport report;
  report.seed = seed;
  for (int it = 0; it < opts.max_iter; ++it) {
    const double l = e_step(g, pts, resp);
    report.loglik_trace.push_back(l);
    report.iterations = it + 1;
    if (report.loglik_trace.size() > 1) {
      const double prev = report.loglik_trace[report.loglik_trace.size() - 2];
      if (std::abs(l - prev) < opts.tol * std::abs(prev)) {
        report.converged = true;
        break;
      }
    }
    if (it + 1 == opts.max_iter) break;
    g = m_step(pts, resp, opts.cov_reg);
  }
  report.loglik = report.loglik_trace.back();
  report.aic = aic(report.loglik, k);
  return {std::move(g), std::move(report)};
}

}  // namespace

std::pair<Gmm, FitReport> em_fit(const std::vector<Vec2>& points, int k, std::uint64_t seed, const EmOptions& opts) {
  if (k < 1) throw InvalidFit("component count must be at least 1");
  if (static_cast<std::size_t>(k) > points.size())
    throw InvalidFit("component count " + std::to_string(k) + " exceeds the " + std::to_string(points.size()) +
                     " points");
  if (!(opts.cov_reg >= 0.0)) throw InvalidFit("cov_reg must be nonnegative");
  std::uint64_t s = seed;
  for (int restart = 0; restart <= opts.max_restarts; ++restart) {
    try {
      auto result = em_once(points, k, s, opts);
      result.second.restarts = restart;
      return result;
    } catch (const Collapsed&) {
      s += 0x9E3779B97F4A7C15ULL;
    }
  }
  throw CollapseFailure("a mixture component collapsed in " + std::to_string(opts.max_restarts + 1) + " attempts");
}

std::pair<Gmm, FitReport> select_by_aic(const std::vector<Vec2>& points, int k_min, int k_max, std::uint64_t seed,
                                        const EmOptions& opts) {
  if (k_min < 1 || k_max < k_min) throw InvalidFit("invalid component range");
  std::optional<std::pair<Gmm, FitReport>> best;
  std::vector<std::pair<int, double>> table;
  for (int k = k_min; k <= k_max; ++k) {
    auto fit = em_fit(points, k, seed, opts);
    table.emplace_back(k, fit.second.aic);
    if (!best || fit.second.aic < best->second.aic) best = std::move(fit);
  }
  best->second.aic_by_k = std::move(table);
  return std::move(*best);
}

Gmm single_gaussian(const Vec2& mean, const Mat2& cov) { return Gmm({1.0}, {mean}, {cov}); }

nlohmann::json gmm_to_json(const Gmm& g) {
  nlohmann::json doc;
  doc["weights"] = g.weights();
  auto& means = doc["means"] = nlohmann::json::array();
  auto& covs = doc["covs"] = nlohmann::json::array();
  for (int i = 0; i < g.k(); ++i) {
    means.push_back({g.means()[i].x(), g.means()[i].y()});
    const Mat2& c = g.covs()[i];
    covs.push_back({{c(0, 0), c(0, 1)}, {c(1, 0), c(1, 1)}});
  }
  return doc;
}

Gmm gmm_from_json(const nlohmann::json& doc) {
  try {
    auto weights = doc.at("weights").get<std::vector<double>>();
    std::vector<Vec2> means;
    std::vector<Mat2> covs;
    for (const auto& m : doc.at("means")) {
      const auto v = m.get<std::vector<double>>();
      if (v.size() != 2) throw FormatError("GMM mean must have 2 entries");
      means.emplace_back(v[0], v[1]);
    }
    for (const auto& c : doc.at("covs")) {
      const auto rows = c.get<std::vector<std::vector<double>>>();
      if (rows.size() != 2 || rows[0].size() != 2 || rows[1].size() != 2)
        throw FormatError("GMM covariance must be 2x2");
      Mat2 m;
      m << rows[0][0], rows[0][1], rows[1][0], rows[1][1];
      covs.push_back(m);
    }
    return Gmm(std::move(weights), std::move(means), std::move(covs));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("GMM JSON: ") + e.what());
  }
}

void write_gmm_json(const Gmm& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << gmm_to_json(g).dump(2) << '\n';
}

Gmm read_gmm_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return gmm_from_json(doc);
}

}  // namespace fpreg
