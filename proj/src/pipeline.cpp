#include "fpreg/pipeline.hpp"

#include "fpreg/analytic.hpp"
#include "fpreg/boundary.hpp"
#include "fpreg/field_io.hpp"
#include "fpreg/mesh_io.hpp"
#include "fpreg/point_cloud.hpp"
#include "fpreg/svg.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace fpreg {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Random streams derived from the config seed.
enum Stream : std::uint64_t { particles_stream = 0, target_stream = 1, fit0_stream = 2, fit_inf_stream = 3 };

std::size_t dof_count(const TriangleMesh& mesh, int degree) {
  return degree == 1 ? mesh.num_vertices() : mesh.num_vertices() + mesh.num_edges();
}

bool inside_domain(const RectWithHole& d, const Vec2& p) {
  if (p.x() <= d.x.lo || p.x() >= d.x.hi || p.y() <= d.y.lo || p.y() >= d.y.hi) return false;
  return d.hole_radius <= 0.0 || (p - d.hole_center).norm() > d.hole_radius;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json fit_report_json(const FitReport& r, const Gmm& g) {
  json aic_by_k = json::array();
  for (const auto& [k, a] : r.aic_by_k) aic_by_k.push_back({{"k", k}, {"aic", a}});
  return {{"k", g.k()},
          {"loglik", r.loglik},
          {"aic", r.aic},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"seed", r.seed},
          {"restarts", r.restarts},
          {"aic_by_k", aic_by_k},
          {"loglik_trace", r.loglik_trace}};
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("missing input '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

void require_input(const fs::path& path, const std::string& hint) {
  if (!fs::exists(path)) throw ConfigError("missing input '" + path.string() + "' (" + hint + ")");
}

std::vector<Vec2> with_tracked(const std::vector<Vec2>& particles, const RunConfig& cfg) {
  std::vector<Vec2> all = particles;
  all.insert(all.end(), cfg.tracked.begin(), cfg.tracked.end());
  return all;
}

}  // namespace

double mesh_size_for_dofs(const RectWithHole& domain, int degree, long nhf) {
  if (nhf < 3) throw InvalidArgument("target dof count must be at least 3");
  const double area = domain.x.length() * domain.y.length() -
                      std::numbers::pi * domain.hole_radius * domain.hole_radius;
  double h = degree * std::sqrt(area / static_cast<double>(nhf));
  double best_h = h;
  double best_err = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 4; ++it) {
    const auto n = static_cast<double>(dof_count(generate_rect_with_hole(domain, h), degree));
    const double err = std::abs(n - nhf) / nhf;
    if (err < best_err) {
      best_err = err;
      best_h = h;
    }
    if (err < 0.01) break;
    h *= std::sqrt(n / nhf);
  }
  return best_h;
}

std::shared_ptr<const TriangleMesh> build_mesh(const RunConfig& cfg) {
  if (!cfg.mesh.file.empty()) return std::make_shared<const TriangleMesh>(read_mesh(cfg.resolve(cfg.mesh.file)));
  const double h = cfg.mesh.target_h ? *cfg.mesh.target_h : mesh_size_for_dofs(cfg.domain, cfg.fe_degree, *cfg.target_nhf);
  return std::make_shared<const TriangleMesh>(generate_rect_with_hole(cfg.domain, h));
}

std::vector<Vec2> build_cloud(const CloudSpec& spec, const RunConfig& cfg, const Gmm* density, std::uint64_t seed) {
  switch (spec.kind) {
    case CloudSpec::Kind::file: {
      auto pts = read_points_csv(cfg.resolve(spec.path));
      if (pts.empty()) throw FormatError("point cloud '" + spec.path + "' is empty");
      return pts;
    }
    case CloudSpec::Kind::arc: return generate_arc_cloud(spec.arc, seed);
    case CloudSpec::Kind::sample: {
      if (!density) throw ConfigError("a sampled cloud needs a density to sample from");
      // Rejection against the domain: the densities live on the bounded domain.
      std::vector<Vec2> out;
      out.reserve(spec.n);
      for (std::uint64_t round = 0; out.size() < spec.n; ++round) {
        if (round > 1000) throw InvalidFit("density has almost no mass inside the domain");
        for (const auto& p : sample(*density, spec.n, round == 0 ? seed : derive_seed(seed, round)))
          if (out.size() < spec.n && inside_domain(cfg.domain, p)) out.push_back(p);
      }
      return out;
    }
  }
  return {};
}

RunInputs prepare_inputs(const RunConfig& cfg) {
  RunInputs in;
  auto side = [&](const DensitySpec& d, const CloudSpec& c, std::uint64_t cloud_stream, std::uint64_t fit_stream,
                  Gmm& g, std::optional<FitReport>& report, std::vector<Vec2>& cloud) {
    switch (d.kind) {
      case DensitySpec::Kind::gaussian: g = single_gaussian(d.mean, d.cov); break;
      case DensitySpec::Kind::gmm_file: g = read_gmm_json(cfg.resolve(d.path)); break;
      case DensitySpec::Kind::fit: break;
    }
    const bool fit = d.kind == DensitySpec::Kind::fit;
    cloud = build_cloud(c, cfg, fit ? nullptr : &g, derive_seed(cfg.seed, cloud_stream));
    if (fit) {
      auto [model, rep] = select_by_aic(cloud, cfg.density_fit.k_min, cfg.density_fit.k_max,
                                        derive_seed(cfg.seed, fit_stream), cfg.density_fit.em);
      g = std::move(model);
      report = std::move(rep);
    }
  };
  side(cfg.initial, cfg.particles, particles_stream, fit0_stream, in.rho0, in.fit0, in.particles);
  side(cfg.target, cfg.target_cloud, target_stream, fit_inf_stream, in.rho_inf, in.fit_inf, in.target_points);
  return in;
}

FeField build_potential(std::shared_ptr<const FeSpace> space, const Gmm& rho_inf, const BoundarySpec& spec,
                        FeField* w_delta) {
  if (spec.eps <= 0.0) return interpolate(space, [&](const Vec2& x) { return -gmm_logpdf(rho_inf, x); });
  if (space->degree() != 2) throw ConfigError("boundary.eps > 0 needs fe_degree 2 (the smoother is P2 only)");
  const FeField raw = raw_distance_field(space, spec.smoother.tol);
  FeField w = smooth_distance(raw, spec.smoother);
  FeField v = regularized_potential(rho_inf, w, spec.eps);
  if (w_delta) *w_delta = std::move(w);
  return v;
}

FeField initial_density(std::shared_ptr<const FeSpace> space, const Gmm& rho0, bool renormalize) {
  FeField rho = interpolate(space, [&](const Vec2& x) { return gmm_pdf(rho0, x); });
  if (renormalize) {
    const double mass = integrate(rho);
    if (!(mass > 0.0)) throw InvalidFit("initial density has no mass inside the domain");
    rho.coeffs /= mass;
  }
  return rho;
}

SolveRun run_solve(const RunConfig& cfg, std::shared_ptr<const TriangleMesh> mesh, const RunInputs& in) {
  auto space = build_space(std::move(mesh), cfg.fe_degree);
  FeField v = build_potential(space, in.rho_inf, cfg.boundary);
  const FeField rho0 = initial_density(space, in.rho0, cfg.renormalize_rho0);
  const TimeGrid grid = make_time_grid(cfg.time.T, cfg.time.K, cfg.time.power);
  FpSolveOptions opts;
  opts.supg = cfg.supg;
  opts.snapshot_times = cfg.snapshot_times;
  opts.store_every_step = true;
  const Gmm target = in.rho_inf;
  opts.rho_inf = [target](const Vec2& x) { return gmm_pdf(target, x); };
  opts.log_rho_inf = [target](const Vec2& x) { return gmm_logpdf(target, x); };
  DensityTrajectory traj = solve_fp(rho0, v, grid, opts);
  return {space, std::move(v), std::move(traj)};
}

TrajectoryLog run_trace(const RunConfig& cfg, const DensityTrajectory& traj, const FeField& potential,
                        const std::vector<Vec2>& particles) {
  ParticleSet set(traj.space->mesh(), with_tracked(particles, cfg));
  AdvectOptions opts;
  opts.formula = cfg.velocity_formula;
  opts.exit_policy = cfg.exit_policy;
  opts.exit_tol = cfg.exit_tol;
  opts.substeps = cfg.rk2_substeps;
  opts.max_steps = cfg.trace_steps;
  switch (cfg.integrator) {
    case Integrator::euler: return advect_euler(std::move(set), traj, potential, opts);
    case Integrator::rk2: return advect_rk2(std::move(set), traj, potential, opts);
    case Integrator::gf: return advect_gf(std::move(set), traj, opts);
  }
  return {};
}

json trace_summary(const RunConfig& cfg, const TrajectoryLog& log, const RunInputs& in) {
  const std::size_t n_main = in.particles.size();
  const auto& final_pos = log.final_positions();
  const auto& final_alive = log.alive.back();
  std::vector<Vec2> initial(log.positions.front().begin(), log.positions.front().begin() + n_main);
  std::vector<Vec2> final_main;
  double min_boundary = std::numeric_limits<double>::infinity();
  double min_hole = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n_main; ++i) {
    if (final_alive[i]) final_main.push_back(final_pos[i]);
    min_boundary = std::min(min_boundary, log.min_boundary_distance[i]);
    min_hole = std::min(min_hole, log.min_hole_distance[i]);
  }
  Vec2 mean = Vec2::Zero();
  Mat2 cov = Mat2::Zero();
  for (const auto& p : final_main) mean += p;
  if (!final_main.empty()) mean /= static_cast<double>(final_main.size());
  for (const auto& p : final_main) cov += (p - mean) * (p - mean).transpose();
  if (final_main.size() > 1) cov /= static_cast<double>(final_main.size() - 1);

  json tracked = json::array();
  for (std::size_t j = 0; j < cfg.tracked.size(); ++j) {
    const std::size_t i = n_main + j;
    tracked.push_back({{"index", i},
                       {"start", {cfg.tracked[j].x(), cfg.tracked[j].y()}},
                       {"final", {final_pos[i].x(), final_pos[i].y()}},
                       {"alive", static_cast<bool>(final_alive[i])},
                       {"min_boundary_distance", number_or_null(log.min_boundary_distance[i])},
                       {"min_hole_distance", number_or_null(log.min_hole_distance[i])},
                       {"exits", log.exits_per_particle[i]}});
  }
  const bool have_final = !final_main.empty() && !in.target_points.empty();
  return {{"integrator", to_string(cfg.integrator)},
          {"n_particles", n_main},
          {"n_tracked", cfg.tracked.size()},
          {"steps_advected", log.steps.back()},
          {"final_time", log.times.back()},
          {"alive", final_main.size()},
          {"exits", log.exits},
          {"min_boundary_distance", number_or_null(min_boundary)},
          {"min_hole_distance", number_or_null(min_hole)},
          {"hausdorff_initial_target", number_or_null(in.target_points.empty() || initial.empty()
                                                          ? std::nan("")
                                                          : hausdorff(initial, in.target_points))},
          {"hausdorff_final_target",
           number_or_null(have_final ? hausdorff(final_main, in.target_points) : std::nan(""))},
          {"final_mean", {mean.x(), mean.y()}},
          {"final_cov", {{cov(0, 0), cov(0, 1)}, {cov(1, 0), cov(1, 1)}}},
          {"tracked", tracked}};
}

DiagnosticsChecks check_diagnostics(const std::vector<StepDiagnostics>& rows) {
  DiagnosticsChecks c;
  if (rows.empty()) return c;
  c.max_kl_increase = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    c.max_mass_drift = std::max(c.max_mass_drift, std::abs(rows[k].mass - rows[0].mass));
    if (k > 0) c.max_kl_increase = std::max(c.max_kl_increase, rows[k].kl - rows[k - 1].kl);
  }
  if (rows.size() == 1) c.max_kl_increase = 0.0;
  c.l1_initial = rows.front().l1_error;
  c.l1_final = rows.back().l1_error;
  c.kl_final = rows.back().kl;
  return c;
}

void cmd_meshgen(const RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  const auto mesh = build_mesh(cfg);
  write_mesh_json(*mesh, out / "mesh.json");
}

void cmd_fitgmm(const RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  RunInputs in = prepare_inputs(cfg);
  json report;
  auto fit = [&](const std::vector<Vec2>& cloud, std::uint64_t stream, const char* file, const char* key) {
    auto [g, r] = select_by_aic(cloud, cfg.density_fit.k_min, cfg.density_fit.k_max,
                                derive_seed(cfg.seed, stream), cfg.density_fit.em);
    write_gmm_json(g, out / file);
    report[key] = fit_report_json(r, g);
    report[key]["points"] = cloud.size();
  };
  fit(in.particles, fit0_stream, "gmm_initial.json", "initial");
  fit(in.target_points, fit_inf_stream, "gmm_target.json", "target");
  write_json(report, out / "fit_report.json");
}

void cmd_gencloud(const RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  const RunInputs in = prepare_inputs(cfg);
  write_points_csv(out / "points.csv", in.particles);
  write_points_csv(out / "target_points.csv", in.target_points);
}

void cmd_solve(const RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  const RunInputs in = prepare_inputs(cfg);
  auto mesh = build_mesh(cfg);
  write_mesh_json(*mesh, out / "mesh.json");
  write_points_csv(out / "points.csv", in.particles);
  write_points_csv(out / "target_points.csv", in.target_points);
  write_gmm_json(in.rho0, out / "gmm_initial.json");
  write_gmm_json(in.rho_inf, out / "gmm_target.json");

  const SolveRun run = run_solve(cfg, mesh, in);
  const auto& traj = run.trajectory;
  write_field_binary(run.potential, out / "V.fpfld");
  for (std::size_t i = 0; i < traj.snapshot_steps.size(); ++i) {
    FeField f(run.space);
    f.coeffs = traj.snapshots[i];
    write_field_binary(f, out / snapshot_filename(traj.snapshot_steps[i]));
  }
  write_diagnostics_csv(traj.diagnostics, out / "diagnostics.csv");

  const DiagnosticsChecks checks = check_diagnostics(traj.diagnostics);
  std::vector<int> requested;
  for (double t : cfg.snapshot_times) requested.push_back(traj.grid.nearest_index(t));
  json fits = json::object();
  if (in.fit0) fits["initial"] = fit_report_json(*in.fit0, in.rho0);
  if (in.fit_inf) fits["target"] = fit_report_json(*in.fit_inf, in.rho_inf);
  const json run_json = {{"config", config_to_json(cfg)},
                         {"dofs", run.space->num_dofs()},
                         {"triangles", mesh->num_triangles()},
                         {"max_diameter", mesh->max_diameter()},
                         {"degree", cfg.fe_degree},
                         {"grid", {{"T", traj.grid.T}, {"K", traj.grid.K}, {"power", traj.grid.power}}},
                         {"snapshot_steps", requested},
                         {"factorizations", traj.factorizations},
                         {"krylov_iterations", traj.krylov_iterations},
                         {"fits", fits},
                         {"max_mass_drift", checks.max_mass_drift},
                         {"max_kl_increase", checks.max_kl_increase},
                         {"l1_initial", checks.l1_initial},
                         {"l1_final", checks.l1_final},
                         {"kl_final", checks.kl_final}};
  write_json(run_json, out / "run.json");
}

void cmd_trace(const RunConfig& cfg, const fs::path& out) {
  const char* hint = "run the solve command with the same --out first";
  require_input(out / "run.json", hint);
  require_input(out / "mesh.json", hint);
  require_input(out / "V.fpfld", hint);
  const json run = read_json(out / "run.json");
  if (run.at("grid").at("K").get<int>() != cfg.time.K || run.at("degree").get<int>() != cfg.fe_degree)
    throw ConfigError("trajectory in '" + out.string() + "' was computed with a different grid or degree");

  auto mesh = std::make_shared<const TriangleMesh>(read_mesh_json(out / "mesh.json"));
  auto space = build_space(mesh, cfg.fe_degree);
  const FeField v = bind_field(space, read_field_binary(out / "V.fpfld"));
  DensityTrajectory traj;
  traj.space = space;
  traj.grid = make_time_grid(cfg.time.T, cfg.time.K, cfg.time.power);
  for (int k = 0; k <= cfg.time.K; ++k) {
    const fs::path p = out / snapshot_filename(k);
    require_input(p, hint);
    traj.snapshot_steps.push_back(k);
    traj.snapshots.push_back(bind_field(space, read_field_binary(p)).coeffs);
  }
  const RunInputs in = prepare_inputs(cfg);
  const TrajectoryLog log = run_trace(cfg, traj, v, in.particles);
  write_trajectory_csv(log, out / "trajectories.csv");
  write_json(trace_summary(cfg, log, in), out / "summary.json");
}

std::vector<TrajectoryRow> read_trajectory_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("missing input '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != "k,t,particle_id,x,y,alive")
    throw FormatError("'" + path.string() + "' lacks the trajectory header");
  std::vector<TrajectoryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    TrajectoryRow r;
    char c1, c2, c3, c4, c5;
    double x, y;
    int alive;
    if (!(ss >> r.k >> c1 >> r.t >> c2 >> r.particle >> c3 >> x >> c4 >> y >> c5 >> alive))
      throw FormatError("malformed trajectory row '" + line + "'");
    r.x = {x, y};
    r.alive = alive != 0;
    rows.push_back(r);
  }
  return rows;
}

void cmd_report(const RunConfig& cfg, const fs::path& out) {
  const char* hint = "run solve and trace with the same --out first";
  require_input(out / "diagnostics.csv", hint);
  require_input(out / "summary.json", hint);
  const auto rows = read_diagnostics_csv(out / "diagnostics.csv");
  if (rows.empty()) throw FormatError("diagnostics.csv has no rows");
  const json summary = read_json(out / "summary.json");
  const DiagnosticsChecks checks = check_diagnostics(rows);
  std::vector<std::string> svgs;

  {
    std::vector<Vec2> l1, kl;
    for (const auto& r : rows) {
      l1.emplace_back(r.t, r.l1_error);
      kl.emplace_back(r.t, r.kl);
    }
    SvgPlot p1(640, 400, bounding_box(l1), "L1 distance to the target density");
    p1.axes("t", "L1");
    p1.polyline(l1, "#1f77b4", 1.5);
    p1.save(out / "error_curve.svg");
    SvgPlot p2(640, 400, bounding_box(kl), "KL divergence to the target density");
    p2.axes("t", "KL");
    p2.polyline(kl, "#d62728", 1.5);
    p2.save(out / "kl_curve.svg");
    svgs.insert(svgs.end(), {"error_curve.svg", "kl_curve.svg"});
  }

  const PlotBox domain_box{cfg.domain.x.lo, cfg.domain.x.hi, cfg.domain.y.lo, cfg.domain.y.hi};
  const double aspect = domain_box.x1 > domain_box.x0
                            ? (domain_box.y1 - domain_box.y0) / (domain_box.x1 - domain_box.x0)
                            : 1.0;
  const double w = 520, h = 100 + 420 * aspect;
  auto frame = [&](SvgPlot& p) {
    p.axes("x", "y");
    if (cfg.domain.hole_radius > 0.0) p.circle_outline(cfg.domain.hole_center, cfg.domain.hole_radius, "black");
  };

  if (fs::exists(out / "trajectories.csv")) {
    const auto traj_rows = read_trajectory_csv(out / "trajectories.csv");
    std::map<int, std::vector<Vec2>> paths;
    std::vector<Vec2> first, last;
    int k_first = std::numeric_limits<int>::max(), k_last = -1;
    for (const auto& r : traj_rows) {
      k_first = std::min(k_first, r.k);
      k_last = std::max(k_last, r.k);
    }
    for (const auto& r : traj_rows) {
      paths[r.particle].push_back(r.x);
      if (r.k == k_first) first.push_back(r.x);
      if (r.k == k_last && r.alive) last.push_back(r.x);
    }
    SvgPlot tp(w, h, domain_box, "Particle trajectories");
    frame(tp);
    for (const auto& [id, path] : paths) tp.polyline(path, "#555555", 0.6);
    tp.points(first, "#d62728", 1.5);
    tp.save(out / "trajectories.svg");

    SvgPlot cp(w, h, domain_box, "Initial, transported and target clouds");
    frame(cp);
    cp.points(first, "#d62728", 2.0);
    if (fs::exists(out / "target_points.csv")) cp.points(read_points_csv(out / "target_points.csv"), "#1f77b4", 2.0);
    cp.points(last, "#2ca02c", 2.0);
    cp.legend({{"initial", "#d62728"}, {"target", "#1f77b4"}, {"final", "#2ca02c"}});
    cp.save(out / "clouds.svg");
    svgs.insert(svgs.end(), {"trajectories.svg", "clouds.svg"});
  }

  const int k_final = rows.back().k;
  if (fs::exists(out / "mesh.json") && fs::exists(out / snapshot_filename(k_final))) {
    auto mesh = std::make_shared<const TriangleMesh>(read_mesh_json(out / "mesh.json"));
    const StoredField stored = read_field_binary(out / snapshot_filename(k_final));
    auto space = build_space(mesh, stored.degree);
    const FeField rho = bind_field(space, stored);
    std::vector<double> values(mesh->num_triangles());
    double vmax = 0.0;
    for (std::size_t t = 0; t < values.size(); ++t) {
      PointLocation loc;
      loc.triangle = static_cast<int>(t);
      loc.barycentric = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
      values[t] = evaluate(rho, loc);
      vmax = std::max(vmax, values[t]);
    }
    SvgPlot dp(w, h, domain_box, "Density at the final time");
    for (std::size_t t = 0; t < values.size(); ++t) {
      const auto& tri = mesh->triangles()[t];
      dp.triangle(mesh->vertices()[tri[0]], mesh->vertices()[tri[1]], mesh->vertices()[tri[2]],
                  ramp_color(vmax > 0.0 ? values[t] / vmax : 0.0));
    }
    frame(dp);
    dp.save(out / "density_final.svg");
    svgs.push_back("density_final.svg");
  }

  const json report = {{"final_t", rows.back().t},
                       {"final_l1", rows.back().l1_error},
                       {"final_kl", rows.back().kl},
                       {"initial_l1", checks.l1_initial},
                       {"l1_reduction", checks.l1_final > 0.0 ? json(checks.l1_initial / checks.l1_final) : json(nullptr)},
                       {"max_mass_drift", checks.max_mass_drift},
                       {"max_kl_increase", checks.max_kl_increase},
                       {"integrator", summary.value("integrator", "")},
                       {"hausdorff_final_target", summary.value("hausdorff_final_target", json(nullptr))},
                       {"hausdorff_initial_target", summary.value("hausdorff_initial_target", json(nullptr))},
                       {"exits", summary.value("exits", 0)},
                       {"min_boundary_distance", summary.value("min_boundary_distance", json(nullptr))},
                       {"min_hole_distance", summary.value("min_hole_distance", json(nullptr))},
                       {"svg", svgs}};
  write_json(report, out / "report.json");
}

}  // namespace fpreg
