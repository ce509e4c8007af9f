#pragma once

#include "fpreg/config.hpp"
#include "fpreg/fpsolve.hpp"
#include "fpreg/particles.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <vector>

namespace fpreg {

/// Generator mesh size giving roughly `nhf` degrees of freedom of the given
/// degree on the domain (a few secant-like corrections on actual counts).
double mesh_size_for_dofs(const RectWithHole& domain, int degree, long nhf);

/// The mesh of a configuration: the mesh file when given, else the generator.
std::shared_ptr<const TriangleMesh> build_mesh(const RunConfig& cfg);

/// Densities and clouds of a run. Clouds sampled from a density and densities
/// fitted to a cloud are resolved in dependency order; every random stream is
/// derived from the config seed.
struct RunInputs {
  Gmm rho0;
  Gmm rho_inf;
  std::optional<FitReport> fit0;
  std::optional<FitReport> fit_inf;
  /// Particle cloud without the tracked particles.
  std::vector<Vec2> particles;
  std::vector<Vec2> target_points;
};

std::vector<Vec2> build_cloud(const CloudSpec& spec, const RunConfig& cfg, const Gmm* density, std::uint64_t seed);
RunInputs prepare_inputs(const RunConfig& cfg);

/// V = -log rho_inf interpolated, plus eps / w_delta when eps > 0 (P2 only).
/// `w_delta` receives the smoothed distance when requested and eps > 0.
FeField build_potential(std::shared_ptr<const FeSpace> space, const Gmm& rho_inf, const BoundarySpec& spec,
                        FeField* w_delta = nullptr);

/// Interpolant of rho0, rescaled to unit mass when `renormalize`.
FeField initial_density(std::shared_ptr<const FeSpace> space, const Gmm& rho0, bool renormalize);

struct SolveRun {
  std::shared_ptr<const FeSpace> space;
  FeField potential;
  DensityTrajectory trajectory;
};

/// Full density solve storing every step, with L1/KL against rho_inf.
SolveRun run_solve(const RunConfig& cfg, std::shared_ptr<const TriangleMesh> mesh, const RunInputs& in);

/// Advects `particles` followed by the tracked particles with the configured
/// integrator.
TrajectoryLog run_trace(const RunConfig& cfg, const DensityTrajectory& traj, const FeField& potential,
                        const std::vector<Vec2>& particles);

/// Summary of a trace: exits, minimum distances, Hausdorff distances of the
/// main cloud, and per-tracked-particle records.
nlohmann::json trace_summary(const RunConfig& cfg, const TrajectoryLog& log, const RunInputs& in);

/// Per-step checks on a diagnostics table.
struct DiagnosticsChecks {
  double max_mass_drift = 0.0;
  /// Largest KL increase between consecutive steps (negative when strictly decreasing).
  double max_kl_increase = 0.0;
  double l1_initial = 0.0;
  double l1_final = 0.0;
  double kl_final = 0.0;
};
DiagnosticsChecks check_diagnostics(const std::vector<StepDiagnostics>& rows);

/// Commands. Each writes into `out` (created if needed) and throws on failure.
void cmd_meshgen(const RunConfig& cfg, const std::filesystem::path& out);
void cmd_fitgmm(const RunConfig& cfg, const std::filesystem::path& out);
void cmd_gencloud(const RunConfig& cfg, const std::filesystem::path& out);
void cmd_solve(const RunConfig& cfg, const std::filesystem::path& out);
void cmd_trace(const RunConfig& cfg, const std::filesystem::path& out);
void cmd_report(const RunConfig& cfg, const std::filesystem::path& out);

/// Rows of a trajectory CSV as written by write_trajectory_csv.
struct TrajectoryRow {
  int k = 0;
  double t = 0.0;
  int particle = 0;
  Vec2 x{0.0, 0.0};
  bool alive = true;
};
std::vector<TrajectoryRow> read_trajectory_csv(const std::filesystem::path& path);

}  // namespace fpreg
