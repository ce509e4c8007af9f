#include "fpreg/fpsolve.hpp"

#include "fpreg/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace fpreg {

TimeGrid make_time_grid(double T, int K, double power) {
  if (!(T > 0.0)) throw InvalidArgument("final time must be positive");
  if (K < 1) throw InvalidArgument("step count must be at least 1");
  if (!(power > 0.0)) throw InvalidArgument("grid power must be positive");
  TimeGrid g{T, K, power, {}};
  g.times.resize(static_cast<std::size_t>(K) + 1);
  for (int k = 0; k <= K; ++k) g.times[k] = T * std::pow(static_cast<double>(k) / K, power);
  g.times[K] = T;
  return g;
}

int TimeGrid::nearest_index(double t) const {
  int best = 0;
  for (int k = 1; k <= K; ++k)
    if (std::abs(times[k] - t) < std::abs(times[best] - t)) best = k;
  return best;
}

bool DensityTrajectory::has_step(int k) const {
  for (int s : snapshot_steps)
    if (s == k) return true;
  return false;
}

FeField DensityTrajectory::at_step(int k) const {
  for (std::size_t i = 0; i < snapshot_steps.size(); ++i)
    if (snapshot_steps[i] == k) return FeField(space, snapshots[i]);
  throw std::out_of_range("no snapshot stored at step " + std::to_string(k));
}

namespace {

SparseOperator combine(const SparseOperator& a, const SparseOperator& b, double beta) {
  SparseOperator out;
  out.matrix = a.matrix + beta * b.matrix;
  out.matrix.makeCompressed();
  out.symmetric = a.symmetric && b.symmetric;
  return out;
}

}  // namespace

DensityTrajectory solve_fp(const FeField& rho0, const FeField& potential, const TimeGrid& grid,
                           const FpSolveOptions& opts) {
  const auto space = rho0.space;
  if (potential.space->mesh_ptr() != space->mesh_ptr() || potential.fe().degree() != space->degree())
    throw SpaceMismatch("density and potential live on different spaces");

  const SparseOperator mass = assemble_mass(*space);
  SparseOperator mass_like = mass;
  SparseOperator transport = assemble_fp_form(*space, potential);
  if (opts.supg) {
    auto [s_time, s_space] = assemble_supg(*space, potential);
    mass_like = combine(mass, s_time, 1.0);
    transport = combine(transport, s_space, 1.0);
  }
  const Eigen::VectorXd weights = basis_integrals(*space);

  std::optional<DensityMetrics> metrics;
  if (opts.rho_inf) metrics.emplace(space, opts.rho_inf, opts.log_rho_inf);

  DensityTrajectory traj;
  traj.space = space;
  traj.grid = grid;
  std::vector<std::vector<std::size_t>> requests(static_cast<std::size_t>(grid.K) + 1);
  if (opts.store_every_step) {
    traj.snapshot_steps.resize(static_cast<std::size_t>(grid.K) + 1);
    for (int k = 0; k <= grid.K; ++k) traj.snapshot_steps[k] = k;
  } else {
    for (double t : opts.snapshot_times) traj.snapshot_steps.push_back(grid.nearest_index(t));
  }
  for (std::size_t i = 0; i < traj.snapshot_steps.size(); ++i) requests[traj.snapshot_steps[i]].push_back(i);
  traj.snapshots.resize(traj.snapshot_steps.size());

  auto record = [&](int k, const Eigen::VectorXd& rho) {
    StepDiagnostics d;
    d.k = k;
    d.t = grid.times[k];
    d.mass = weights.dot(rho);
    d.min_nodal = rho.minCoeff();
    if (metrics) {
      const auto v = metrics->evaluate(rho);
      d.l1_error = v.l1;
      d.kl = v.kl;
      d.kl_clipped = v.clipped;
    } else {
      d.l1_error = d.kl = std::numeric_limits<double>::quiet_NaN();
    }
    traj.diagnostics.push_back(d);
    for (std::size_t i : requests[k]) traj.snapshots[i] = rho;
  };

  Eigen::VectorXd rho = rho0.coeffs;
  record(0, rho);

  LinearSolver solver(opts.solver);
  SparseOperator rhs_op;
  double factored_dt = -1.0;
  for (int k = 0; k < grid.K; ++k) {
    const double dt = grid.dt(k);
    if (factored_dt < 0.0 || std::abs(dt - factored_dt) > 1e-12 * factored_dt) {
      solver.set_matrix(combine(mass_like, transport, 0.5 * dt));
      rhs_op = combine(mass_like, transport, -0.5 * dt);
      factored_dt = dt;
    }
    const Eigen::VectorXd b = rhs_op.matrix * rho;
    try {
      rho = solver.solve(b, &rho);
      traj.krylov_iterations += solver.last_iterations();
    } catch (const SolveFailure& e) {
      throw SolveFailure(std::string(e.what()) + " at step " + std::to_string(k + 1), e.residual(), k + 1);
    }
    if (!rho.allFinite())
      throw SolveFailure("non-finite density at step " + std::to_string(k + 1),
                         std::numeric_limits<double>::quiet_NaN(), k + 1);
    record(k + 1, rho);
    if (opts.on_step) opts.on_step(k + 1, rho);
  }
  traj.factorizations = solver.factorizations();
  return traj;
}

std::vector<StepDiagnostics> diagnostics_report(const DensityTrajectory& traj, const PointFunction& rho_inf,
                                                const PointFunction& log_rho_inf) {
  std::vector<StepDiagnostics> rows = traj.diagnostics;
  if (!rho_inf) return rows;
  const DensityMetrics metrics(traj.space, rho_inf, log_rho_inf);
  for (std::size_t i = 0; i < traj.snapshot_steps.size(); ++i) {
    const int k = traj.snapshot_steps[i];
    if (k >= static_cast<int>(rows.size())) continue;
    const auto v = metrics.evaluate(traj.snapshots[i]);
    rows[k].l1_error = v.l1;
    rows[k].kl = v.kl;
    rows[k].kl_clipped = v.clipped;
  }
  return rows;
}

std::string diagnostics_csv(const std::vector<StepDiagnostics>& rows) {
  std::string out = "k,t,mass,l1_error,kl,min_nodal\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.k, r.t, r.mass, r.l1_error, r.kl,
                  r.min_nodal);
    out += buf;
  }
  return out;
}

void write_diagnostics_csv(const std::vector<StepDiagnostics>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << diagnostics_csv(rows);
}

std::vector<StepDiagnostics> read_diagnostics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("k,t,mass,l1_error,kl,min_nodal", 0) != 0)
    throw FormatError(path.string() + ": missing diagnostics header");
  std::vector<StepDiagnostics> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    StepDiagnostics r;
    std::string cells[6];
    for (auto& cell : cells)
      if (!std::getline(ss, cell, ',')) throw FormatError(path.string() + ": short diagnostics row");
    try {
      r.k = std::stoi(cells[0]);
      r.t = std::stod(cells[1]);
      r.mass = std::stod(cells[2]);
      r.l1_error = std::stod(cells[3]);
      r.kl = std::stod(cells[4]);
      r.min_nodal = std::stod(cells[5]);
    } catch (const std::exception&) {
      throw FormatError(path.string() + ": bad diagnostics row '" + line + "'");
    }
    rows.push_back(r);
  }
  return rows;
}

std::string snapshot_filename(int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "rho_%06d.fpfld", k);
  return buf;
}

}  // namespace fpreg
