#pragma once

#include "fpreg/fpsolve.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fpreg {

struct ParticleSet {
  std::vector<Vec2> positions;
  std::vector<bool> alive;
  /// Last containing triangle, used as the point-location hint.
  std::vector<int> hints;

  ParticleSet() = default;
  /// Locates every point; points outside the domain start dead.
  ParticleSet(const TriangleMesh& mesh, std::vector<Vec2> points);
  std::size_t size() const { return positions.size(); }
};

enum class VelocityFormula { theorem, literal_eq16 };
enum class ExitPolicy { project, kill };

VelocityFormula velocity_formula_from_string(const std::string& s);
std::string to_string(VelocityFormula f);

struct AdvectOptions {
  VelocityFormula formula = VelocityFormula::theorem;
  ExitPolicy exit_policy = ExitPolicy::project;
  /// Density floor in grad(rho) / rho.
  double floor = 1e-12;
  /// Distance from the boundary at which exiting particles are put back.
  double exit_tol = 1e-3;
  /// RK2 substeps per grid interval.
  int substeps = 1;
  /// Regularization of the GF potential problem.
  double eps_gf = 1e-10;
  /// Store positions every `record_every` steps (the last step always).
  int record_every = 1;
  /// Advect over the first `max_steps` grid intervals only; -1 runs them all.
  int max_steps = -1;
};

struct TrajectoryLog {
  std::vector<int> steps;
  std::vector<double> times;
  std::vector<std::vector<Vec2>> positions;
  std::vector<std::vector<bool>> alive;
  /// Minimum over the run of each particle's distance to the whole boundary
  /// and to the hole facets only (infinity when there is no hole).
  std::vector<double> min_boundary_distance;
  std::vector<double> min_hole_distance;
  std::vector<int> exits_per_particle;
  int exits = 0;

  const std::vector<Vec2>& final_positions() const { return positions.back(); }
};

/// u = -(grad rho / max(rho, floor) + grad V), or grad V + grad rho for the
/// literal variant. Throws OutsideDomain.
Vec2 velocity_at(const Vec2& x, const FeField& rho, const FeField& potential, double floor = 1e-12,
                 VelocityFormula formula = VelocityFormula::theorem);
Vec2 velocity_at(const PointLocation& loc, const FeField& rho, const FeField& potential, double floor = 1e-12,
                 VelocityFormula formula = VelocityFormula::theorem);

/// Explicit Euler with the step-k density. The trajectory must hold every step.
TrajectoryLog advect_euler(ParticleSet particles, const DensityTrajectory& traj, const FeField& potential,
                           const AdvectOptions& opts = {});

/// Heun substeps with the density blended linearly in time within each interval.
TrajectoryLog advect_rk2(ParticleSet particles, const DensityTrajectory& traj, const FeField& potential,
                         const AdvectOptions& opts = {});

/// Solves int rho_k grad psi . grad v + eps psi v = int (rho_k1 - rho_k) v.
FeField gf_potential(const FeField& rho_k, const FeField& rho_k1, double eps_gf = 1e-10);

/// Per step X += grad psi_k(X), no time-step factor.
TrajectoryLog advect_gf(ParticleSet particles, const DensityTrajectory& traj, const AdvectOptions& opts = {});

/// Symmetric Hausdorff distance by brute force. Throws InvalidArgument on empty input.
double hausdorff(const std::vector<Vec2>& a, const std::vector<Vec2>& b);

/// Header `k,t,particle_id,x,y,alive`.
void write_trajectory_csv(const TrajectoryLog& log, const std::filesystem::path& path);

}  // namespace fpreg
