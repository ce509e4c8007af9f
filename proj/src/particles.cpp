#include "fpreg/particles.hpp"

#include "fpreg/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>

namespace fpreg {

ParticleSet::ParticleSet(const TriangleMesh& mesh, std::vector<Vec2> points) : positions(std::move(points)) {
  alive.assign(positions.size(), false);
  hints.assign(positions.size(), 0);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto loc = locate_point(mesh, positions[i]);
    alive[i] = loc.inside();
    hints[i] = loc.inside() ? loc.triangle : 0;
  }
}

VelocityFormula velocity_formula_from_string(const std::string& s) {
  if (s == "theorem") return VelocityFormula::theorem;
  if (s == "literal_eq16") return VelocityFormula::literal_eq16;
  throw FormatError("unknown velocity_formula '" + s + "' (expected theorem or literal_eq16)");
}

std::string to_string(VelocityFormula f) { return f == VelocityFormula::theorem ? "theorem" : "literal_eq16"; }

namespace {

Vec2 velocity_from(double rho, const Vec2& grad_rho, const Vec2& grad_v, double floor, VelocityFormula formula) {
  if (formula == VelocityFormula::literal_eq16) return grad_v + grad_rho;
  return -(grad_rho / std::max(rho, floor) + grad_v);
}

}  // namespace

Vec2 velocity_at(const PointLocation& loc, const FeField& rho, const FeField& potential, double floor,
                 VelocityFormula formula) {
  const auto [value, grad] = evaluate_with_gradient(rho, loc);
  return velocity_from(value, grad, evaluate_gradient(potential, loc), floor, formula);
}

Vec2 velocity_at(const Vec2& x, const FeField& rho, const FeField& potential, double floor,
                 VelocityFormula formula) {
  return velocity_at(locate_point(rho.fe().mesh(), x), rho, potential, floor, formula);
}

double hausdorff(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  if (a.empty() || b.empty()) throw InvalidArgument("Hausdorff distance needs nonempty sets");
  auto directed = [](const std::vector<Vec2>& p, const std::vector<Vec2>& q) {
    double worst = 0.0;
    for (const auto& x : p) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& y : q) best = std::min(best, (x - y).squaredNorm());
      worst = std::max(worst, best);
    }
    return std::sqrt(worst);
  };
  return std::max(directed(a, b), directed(b, a));
}

namespace {

// Shared bookkeeping of the three integrators: containment, exits, distances
// and recording.
class Tracker {
 public:
  Tracker(const TriangleMesh& mesh, ParticleSet& p, const TimeGrid& grid, const AdvectOptions& opts)
      : mesh_(mesh), p_(p), grid_(grid), opts_(opts) {
    for (std::size_t f = 0; f < mesh.boundary().size(); ++f)
      if (mesh.boundary()[f].tag == BoundaryTag::hole) hole_facets_.push_back(static_cast<int>(f));
    log_.min_boundary_distance.assign(p.size(), std::numeric_limits<double>::infinity());
    log_.min_hole_distance.assign(p.size(), std::numeric_limits<double>::infinity());
    log_.exits_per_particle.assign(p.size(), 0);
    update_distances();
    record(0);
  }

  // Location of an alive particle, re-projected if it has drifted out.
  PointLocation locate(std::size_t i) {
    auto loc = locate_point(mesh_, p_.positions[i], p_.hints[i]);
    if (!loc.inside()) {
      p_.positions[i] = project_inside(p_.positions[i]);
      loc = locate_point(mesh_, p_.positions[i], p_.hints[i]);
    }
    p_.hints[i] = loc.triangle;
    return loc;
  }

  // Returns the location of x, projecting it back (or killing the particle)
  // when it left the domain. Counts an exit only when `count` is set.
  std::optional<PointLocation> settle(std::size_t i, Vec2 x, bool count) {
    auto loc = locate_point(mesh_, x, p_.hints[i]);
    if (!loc.inside()) {
      if (count) {
        ++log_.exits;
        ++log_.exits_per_particle[i];
      }
      if (opts_.exit_policy == ExitPolicy::kill) {
        if (count) p_.alive[i] = false;
        return std::nullopt;
      }
      x = project_inside(x);
      loc = locate_point(mesh_, x, p_.hints[i]);
    }
    if (count) {
      p_.positions[i] = x;
      p_.hints[i] = loc.triangle;
    }
    return loc;
  }

  void finish_step(int k) {
    update_distances();
    if (k % std::max(1, opts_.record_every) == 0 || k == last_step_) record(k);
  }

  void set_last_step(int k) { last_step_ = k; }
  TrajectoryLog take() { return std::move(log_); }

 private:
  Vec2 project_inside(const Vec2& x) const {
    const auto proj = nearest_boundary_point(mesh_, x);
    const auto& f = mesh_.boundary()[proj.facet];
    const Vec2 d = mesh_.vertices()[f.vertices[1]] - mesh_.vertices()[f.vertices[0]];
    const Vec2 n = Vec2(-d.y(), d.x()).normalized();
    for (const Vec2& cand : {Vec2(proj.point + opts_.exit_tol * n), Vec2(proj.point - opts_.exit_tol * n)})
      if (locate_point(mesh_, cand).inside()) return cand;
    // Thin spot: step toward the centroid of the triangle owning the boundary point.
    const auto loc = locate_point(mesh_, proj.point);
    if (!loc.inside()) return proj.point;
    const Vec2 c = mesh_.centroid(loc.triangle);
    const Vec2 dir = c - proj.point;
    const double len = dir.norm();
    return proj.point + std::min(opts_.exit_tol, 0.5 * len) * dir / len;
  }

  void update_distances() {
    const auto& v = mesh_.vertices();
    for (std::size_t i = 0; i < p_.size(); ++i) {
      if (!p_.alive[i]) continue;
      const Vec2& x = p_.positions[i];
      log_.min_boundary_distance[i] = std::min(log_.min_boundary_distance[i], boundary_distance(mesh_, x));
      for (int f : hole_facets_) {
        const auto& e = mesh_.boundary()[f].vertices;
        log_.min_hole_distance[i] = std::min(log_.min_hole_distance[i], segment_distance(x, v[e[0]], v[e[1]]));
      }
    }
  }

  void record(int k) {
    log_.steps.push_back(k);
    log_.times.push_back(grid_.times[k]);
    log_.positions.push_back(p_.positions);
    log_.alive.push_back(p_.alive);
  }

  const TriangleMesh& mesh_;
  ParticleSet& p_;
  const TimeGrid& grid_;
  const AdvectOptions& opts_;
  std::vector<int> hole_facets_;
  TrajectoryLog log_;
  int last_step_ = -1;
};

int steps_to_run(const DensityTrajectory& traj, const AdvectOptions& opts) {
  const int k = opts.max_steps < 0 ? traj.grid.K : std::min(traj.grid.K, opts.max_steps);
  if (static_cast<int>(traj.snapshot_steps.size()) < k + 1)
    throw InvalidArgument("particle transport needs the density at every grid step");
  for (int i = 0; i <= k; ++i)
    if (traj.snapshot_steps[i] != i) throw InvalidArgument("particle transport needs consecutive snapshots");
  return k;
}

}  // namespace

TrajectoryLog advect_euler(ParticleSet particles, const DensityTrajectory& traj, const FeField& potential,
                           const AdvectOptions& opts) {
  const int steps = steps_to_run(traj, opts);
  const auto& mesh = traj.space->mesh();
  Tracker tracker(mesh, particles, traj.grid, opts);
  tracker.set_last_step(steps);
  for (int k = 0; k < steps; ++k) {
    const FeField rho(traj.space, traj.snapshots[k]);
    const double dt = traj.grid.dt(k);
    for (std::size_t i = 0; i < particles.size(); ++i) {
      if (!particles.alive[i]) continue;
      const auto loc = tracker.locate(i);
      const Vec2 u = velocity_at(loc, rho, potential, opts.floor, opts.formula);
      tracker.settle(i, particles.positions[i] + dt * u, true);
    }
    tracker.finish_step(k + 1);
  }
  return tracker.take();
}

TrajectoryLog advect_rk2(ParticleSet particles, const DensityTrajectory& traj, const FeField& potential,
                         const AdvectOptions& opts) {
  if (opts.substeps < 1) throw InvalidArgument("RK2 needs at least one substep");
  const int steps = steps_to_run(traj, opts);
  const auto& mesh = traj.space->mesh();
  Tracker tracker(mesh, particles, traj.grid, opts);
  tracker.set_last_step(steps);
  const int m = opts.substeps;
  for (int k = 0; k < steps; ++k) {
    const FeField rho0(traj.space, traj.snapshots[k]);
    const FeField rho1(traj.space, traj.snapshots[k + 1]);
    const double h = traj.grid.dt(k) / m;
    auto blended = [&](const PointLocation& loc, double tau) {
      const auto [v0, g0] = evaluate_with_gradient(rho0, loc);
      const auto [v1, g1] = evaluate_with_gradient(rho1, loc);
      return velocity_from((1.0 - tau) * v0 + tau * v1, (1.0 - tau) * g0 + tau * g1,
                           evaluate_gradient(potential, loc), opts.floor, opts.formula);
    };
    for (std::size_t i = 0; i < particles.size(); ++i) {
      for (int s = 0; s < m && particles.alive[i]; ++s) {
        const double tau0 = static_cast<double>(s) / m, tau1 = static_cast<double>(s + 1) / m;
        const auto loc = tracker.locate(i);
        const Vec2 x = particles.positions[i];
        const Vec2 k1 = blended(loc, tau0);
        // Predictor: an exiting predictor is put back in without counting an exit.
        const auto loc_pred = tracker.settle(i, x + h * k1, false);
        const Vec2 k2 = loc_pred ? blended(*loc_pred, tau1) : k1;
        tracker.settle(i, x + 0.5 * h * (k1 + k2), true);
      }
    }
    tracker.finish_step(k + 1);
  }
  return tracker.take();
}

namespace {

// The weighted operator degenerates where rho_k vanishes (only the eps mass
// term remains), so accuracy is judged by the normwise backward error.
SolveOptions gf_solve_options() {
  SolveOptions o;
  o.kind = SolverKind::direct;
  o.tol = 1e-10;
  o.backward_error = true;
  return o;
}

class GfSolver {
 public:
  GfSolver(const FeSpace& space, double eps)
      : space_(space), eps_(eps), mass_(assemble_mass(space)), solver_(gf_solve_options()) {}

  FeField solve(const FeField& rho_k, const FeField& rho_k1) {
    const Eigen::VectorXd b = mass_.matrix * (rho_k1.coeffs - rho_k.coeffs);
    if (b.isZero(0.0)) return FeField(rho_k.space);
    solver_.set_matrix(assemble_weighted_stiffness(space_, rho_k.coeffs, eps_));
    return FeField(rho_k.space, solver_.solve(b));
  }

 private:
  const FeSpace& space_;
  double eps_;
  SparseOperator mass_;
  LinearSolver solver_;
};

}  // namespace

FeField gf_potential(const FeField& rho_k, const FeField& rho_k1, double eps_gf) {
  if (rho_k.space->mesh_ptr() != rho_k1.space->mesh_ptr() || rho_k.fe().degree() != rho_k1.fe().degree())
    throw SpaceMismatch("GF densities live on different spaces");
  if (!(eps_gf > 0.0)) throw InvalidArgument("eps_gf must be positive");
  GfSolver solver(rho_k.fe(), eps_gf);
  return solver.solve(rho_k, rho_k1);
}

TrajectoryLog advect_gf(ParticleSet particles, const DensityTrajectory& traj, const AdvectOptions& opts) {
  const int steps = steps_to_run(traj, opts);
  const auto& mesh = traj.space->mesh();
  Tracker tracker(mesh, particles, traj.grid, opts);
  tracker.set_last_step(steps);
  GfSolver solver(*traj.space, opts.eps_gf);
  for (int k = 0; k < steps; ++k) {
    FeField psi;
    try {
      psi = solver.solve(FeField(traj.space, traj.snapshots[k]), FeField(traj.space, traj.snapshots[k + 1]));
    } catch (const SolveFailure& e) {
      throw SolveFailure(std::string(e.what()) + " in the GF potential at step " + std::to_string(k + 1),
                         e.residual(), k + 1);
    }
    for (std::size_t i = 0; i < particles.size(); ++i) {
      if (!particles.alive[i]) continue;
      const auto loc = tracker.locate(i);
      tracker.settle(i, particles.positions[i] + evaluate_gradient(psi, loc), true);
    }
    tracker.finish_step(k + 1);
  }
  return tracker.take();
}

void write_trajectory_csv(const TrajectoryLog& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << "k,t,particle_id,x,y,alive\n";
  char buf[160];
  for (std::size_t s = 0; s < log.steps.size(); ++s)
    for (std::size_t i = 0; i < log.positions[s].size(); ++i) {
      std::snprintf(buf, sizeof buf, "%d,%.17g,%zu,%.17g,%.17g,%d\n", log.steps[s], log.times[s], i,
                    log.positions[s][i].x(), log.positions[s][i].y(), log.alive[s][i] ? 1 : 0);
      out << buf;
    }
}

}  // namespace fpreg
