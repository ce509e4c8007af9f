#pragma once

#include "fpreg/analytic.hpp"
#include "fpreg/fem.hpp"
#include "fpreg/linear_solver.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace fpreg {

/// t_k = T (k / K)^power for k = 0..K.
struct TimeGrid {
  double T = 1.0;
  int K = 1;
  double power = 1.0;
  std::vector<double> times;

  double dt(int k) const { return times[k + 1] - times[k]; }
  /// Grid index whose time is closest to t (ties toward the earlier index).
  int nearest_index(double t) const;
};

TimeGrid make_time_grid(double T, int K, double power);

struct StepDiagnostics {
  int k = 0;
  double t = 0.0;
  double mass = 0.0;
  double l1_error = 0.0;
  double kl = 0.0;
  double min_nodal = 0.0;
  long kl_clipped = 0;
};

struct DensityTrajectory {
  std::shared_ptr<const FeSpace> space;
  TimeGrid grid;
  /// Grid index of each stored snapshot, in request order.
  std::vector<int> snapshot_steps;
  std::vector<Eigen::VectorXd> snapshots;
  /// One row per grid point k = 0..K.
  std::vector<StepDiagnostics> diagnostics;
  /// Linear-solver statistics of the run.
  int factorizations = 0;
  long krylov_iterations = 0;

  /// Snapshot stored at grid index k; throws std::out_of_range when absent.
  FeField at_step(int k) const;
  bool has_step(int k) const;
};

struct FpSolveOptions {
  bool supg = true;
  /// Times to store; each maps to the nearest grid index.
  std::vector<double> snapshot_times;
  /// Store every grid point (needed by the particle integrators).
  bool store_every_step = false;
  /// The previous step's factorization preconditions the next solve.
  SolveOptions solver{SolverKind::automatic, 1e-12, 2000, 5000, 12};
  /// Target density for the L1/KL columns; left empty those columns are NaN.
  PointFunction rho_inf;
  PointFunction log_rho_inf;
  /// Called after every accepted step with (k + 1, coefficients).
  std::function<void(int, const Eigen::VectorXd&)> on_step;
};

/// Crank-Nicolson time stepping of the Fokker-Planck weak form with optional
/// SUPG. `potential` is the FE potential V; its elementwise gradient is the
/// drift. Throws SolveFailure carrying the failing step index.
DensityTrajectory solve_fp(const FeField& rho0, const FeField& potential, const TimeGrid& grid,
                           const FpSolveOptions& opts = {});

/// Per-step table; KL and L1 are recomputed against `rho_inf` at every stored
/// snapshot and taken from the run elsewhere.
std::vector<StepDiagnostics> diagnostics_report(const DensityTrajectory& traj, const PointFunction& rho_inf,
                                                const PointFunction& log_rho_inf = nullptr);

/// CSV with header `k,t,mass,l1_error,kl,min_nodal`.
std::string diagnostics_csv(const std::vector<StepDiagnostics>& rows);
void write_diagnostics_csv(const std::vector<StepDiagnostics>& rows, const std::filesystem::path& path);
std::vector<StepDiagnostics> read_diagnostics_csv(const std::filesystem::path& path);

/// `rho_{k:06}.fpfld`
std::string snapshot_filename(int k);

}  // namespace fpreg
