#include "fpreg/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace fpreg {

using nlohmann::json;

std::string to_string(Integrator i) {
  switch (i) {
    case Integrator::euler: return "euler";
    case Integrator::rk2: return "rk2";
    case Integrator::gf: return "gf";
  }
  return "euler";
}

std::filesystem::path RunConfig::resolve(const std::string& p) const {
  std::filesystem::path path(p);
  if (path.is_absolute() || base_dir.empty()) return path;
  return base_dir / path;
}

std::pair<int, int> line_column(const std::string& text, std::size_t offset) {
  int line = 1;
  int column = 1;
  offset = std::min(offset, text.size());
  for (std::size_t i = 0; i < offset; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

// Walks a JSON object, tracking which keys were consumed so that leftovers
// can be reported as unknown.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail("must be an object");
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(where_ + ": " + msg); }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& at(const std::string& key) {
    if (!has(key)) fail("missing key '" + key + "'");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) fail("'" + key + "' must be a number");
    return v.get<double>();
  }
  double number(const std::string& key, double def) { return has(key) ? number(key) : def; }

  long integer(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number_integer()) fail("'" + key + "' must be an integer");
    return v.get<long>();
  }
  long integer(const std::string& key, long def) { return has(key) ? integer(key) : def; }

  std::string string(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) fail("'" + key + "' must be a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& def) { return has(key) ? string(key) : def; }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const json& v = at(key);
    if (!v.is_boolean()) fail("'" + key + "' must be a boolean");
    return v.get<bool>();
  }

  Vec2 vec2(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      fail("'" + key + "' must be a pair of numbers");
    return {v[0].get<double>(), v[1].get<double>()};
  }

  Mat2 mat2(const std::string& key) {
    const json& v = at(key);
    if (v.is_number()) return v.get<double>() * Mat2::Identity();
    if (!v.is_array() || v.size() != 2) fail("'" + key + "' must be a number or a 2x2 array");
    Mat2 m;
    for (int i = 0; i < 2; ++i) {
      if (!v[i].is_array() || v[i].size() != 2) fail("'" + key + "' must be a number or a 2x2 array");
      for (int j = 0; j < 2; ++j) {
        if (!v[i][j].is_number()) fail("'" + key + "' must contain numbers");
        m(i, j) = v[i][j].get<double>();
      }
    }
    return m;
  }

  Reader child(const std::string& key) { return Reader(at(key), where_ + "." + key); }

  const std::string& where() const { return where_; }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) fail("unknown key '" + key + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void require(bool ok, const Reader& r, const std::string& msg) {
  if (!ok) r.fail(msg);
}

void require_file(const RunConfig& cfg, const Reader& r, const std::string& p) {
  if (p.empty()) r.fail("file path is empty");
  if (!std::filesystem::exists(cfg.resolve(p))) r.fail("file '" + p + "' does not exist");
}

DensitySpec parse_density(Reader r, const RunConfig& cfg) {
  DensitySpec d;
  const std::string type = r.string("type");
  if (type == "gaussian") {
    d.kind = DensitySpec::Kind::gaussian;
    d.mean = r.vec2("mean");
    d.cov = r.mat2("cov");
    require(d.cov.allFinite() && std::abs(d.cov(0, 1) - d.cov(1, 0)) <= 1e-12 && d.cov(0, 0) > 0.0 &&
                d.cov.determinant() > 0.0,
            r, "'cov' must be symmetric positive definite");
  } else if (type == "gmm_file") {
    d.kind = DensitySpec::Kind::gmm_file;
    d.path = r.string("path");
    require_file(cfg, r, d.path);
  } else if (type == "fit") {
    d.kind = DensitySpec::Kind::fit;
  } else {
    r.fail("unknown density type '" + type + "' (expected gaussian, gmm_file or fit)");
  }
  r.finish();
  return d;
}

CloudSpec parse_cloud(Reader r, const RunConfig& cfg) {
  CloudSpec c;
  const std::string source = r.string("source");
  if (source == "sample") {
    c.kind = CloudSpec::Kind::sample;
    const long n = r.integer("n");
    require(n >= 1, r, "'n' must be at least 1");
    c.n = static_cast<std::size_t>(n);
  } else if (source == "file") {
    c.kind = CloudSpec::Kind::file;
    c.path = r.string("path");
    require_file(cfg, r, c.path);
  } else if (source == "arc") {
    c.kind = CloudSpec::Kind::arc;
    c.arc.theta0 = r.number("theta0", c.arc.theta0);
    c.arc.dtheta = r.number("dtheta", c.arc.dtheta);
    const long n = r.integer("n", static_cast<long>(c.arc.n));
    require(n >= 2, r, "'n' must be at least 2");
    c.arc.n = static_cast<std::size_t>(n);
    c.n = c.arc.n;
    c.arc.noise = r.number("noise", c.arc.noise);
    require(c.arc.noise >= 0.0, r, "'noise' must be nonnegative");
  } else {
    r.fail("unknown cloud source '" + source + "' (expected sample, file or arc)");
  }
  r.finish();
  return c;
}

json density_json(const DensitySpec& d) {
  switch (d.kind) {
    case DensitySpec::Kind::gaussian:
      return {{"type", "gaussian"},
              {"mean", {d.mean.x(), d.mean.y()}},
              {"cov", {{d.cov(0, 0), d.cov(0, 1)}, {d.cov(1, 0), d.cov(1, 1)}}}};
    case DensitySpec::Kind::gmm_file: return {{"type", "gmm_file"}, {"path", d.path}};
    case DensitySpec::Kind::fit: return {{"type", "fit"}};
  }
  return {};
}

json cloud_json(const CloudSpec& c) {
  switch (c.kind) {
    case CloudSpec::Kind::sample: return {{"source", "sample"}, {"n", c.n}};
    case CloudSpec::Kind::file: return {{"source", "file"}, {"path", c.path}};
    case CloudSpec::Kind::arc:
      return {{"source", "arc"},
              {"theta0", c.arc.theta0},
              {"dtheta", c.arc.dtheta},
              {"n", c.arc.n},
              {"noise", c.arc.noise}};
  }
  return {};
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string msg = e.what();
    throw ConfigError("malformed JSON: " + msg, line, column);
  }

  RunConfig cfg;
  cfg.base_dir = base_dir;
  Reader r(doc, "config");
  cfg.name = r.string("name", cfg.name);

  {
    Reader d = r.child("domain");
    const Vec2 x = d.vec2("x");
    const Vec2 y = d.vec2("y");
    require(x[0] < x[1] && y[0] < y[1], d, "intervals must be increasing");
    cfg.domain.x = {x[0], x[1]};
    cfg.domain.y = {y[0], y[1]};
    cfg.domain.hole_radius = 0.0;
    if (d.has("hole")) {
      Reader h = d.child("hole");
      cfg.domain.hole_center = h.vec2("center");
      cfg.domain.hole_radius = h.number("radius");
      require(cfg.domain.hole_radius >= 0.0, h, "'radius' must be nonnegative");
      h.finish();
    }
    d.finish();
  }

  if (r.has("mesh")) {
    Reader m = r.child("mesh");
    if (m.has("target_h")) {
      cfg.mesh.target_h = m.number("target_h");
      require(*cfg.mesh.target_h > 0.0, m, "'target_h' must be positive");
    }
    if (m.has("file")) {
      cfg.mesh.file = m.string("file");
      require_file(cfg, m, cfg.mesh.file);
    }
    m.finish();
  }
  cfg.fe_degree = static_cast<int>(r.integer("fe_degree", cfg.fe_degree));
  require(cfg.fe_degree == 1 || cfg.fe_degree == 2, r, "'fe_degree' must be 1 or 2");
  if (r.has("target_nhf")) {
    cfg.target_nhf = r.integer("target_nhf");
    require(*cfg.target_nhf >= 3, r, "'target_nhf' must be at least 3");
  }
  if (r.has("paper_K")) cfg.paper_K = r.integer("paper_K");
  if (r.has("paper_Nhf")) cfg.paper_Nhf = r.integer("paper_Nhf");
  if (cfg.mesh.file.empty() && !cfg.mesh.target_h && !cfg.target_nhf)
    r.fail("one of mesh.file, mesh.target_h or target_nhf is required");

  {
    Reader t = r.child("time");
    cfg.time.T = t.number("T");
    cfg.time.K = static_cast<int>(t.integer("K"));
    cfg.time.power = t.number("power", cfg.time.power);
    require(cfg.time.T > 0.0, t, "'T' must be positive");
    require(cfg.time.K >= 1, t, "'K' must be at least 1");
    require(cfg.time.power > 0.0, t, "'power' must be positive");
    t.finish();
  }

  cfg.initial = parse_density(r.child("initial"), cfg);
  cfg.target = parse_density(r.child("target"), cfg);

  if (r.has("density_fit")) {
    Reader f = r.child("density_fit");
    cfg.density_fit.k_min = static_cast<int>(f.integer("k_min", cfg.density_fit.k_min));
    cfg.density_fit.k_max = static_cast<int>(f.integer("k_max", cfg.density_fit.k_max));
    cfg.density_fit.em.cov_reg = f.number("cov_reg", cfg.density_fit.em.cov_reg);
    cfg.density_fit.em.max_iter = static_cast<int>(f.integer("max_iter", cfg.density_fit.em.max_iter));
    cfg.density_fit.em.tol = f.number("tol", cfg.density_fit.em.tol);
    require(cfg.density_fit.k_min >= 1 && cfg.density_fit.k_min <= cfg.density_fit.k_max, f,
            "need 1 <= k_min <= k_max");
    require(cfg.density_fit.em.cov_reg >= 0.0, f, "'cov_reg' must be nonnegative");
    require(cfg.density_fit.em.max_iter >= 1, f, "'max_iter' must be positive");
    require(cfg.density_fit.em.tol > 0.0, f, "'tol' must be positive");
    f.finish();
  }

  if (r.has("boundary")) {
    Reader b = r.child("boundary");
    cfg.boundary.eps = b.number("eps", cfg.boundary.eps);
    cfg.boundary.smoother.delta = b.number("delta", cfg.boundary.smoother.delta);
    cfg.boundary.smoother.tol = b.number("tol", cfg.boundary.smoother.tol);
    cfg.boundary.smoother.sigma_beta = b.number("sigma_beta", cfg.boundary.smoother.sigma_beta);
    require(cfg.boundary.eps >= 0.0, b, "'eps' must be nonnegative");
    require(cfg.boundary.smoother.delta > 0.0, b, "'delta' must be positive");
    require(cfg.boundary.smoother.tol > 0.0, b, "'tol' must be positive");
    require(cfg.boundary.smoother.sigma_beta > 0.0, b, "'sigma_beta' must be positive");
    b.finish();
  }

  cfg.particles = parse_cloud(r.child("particles"), cfg);
  if (r.has("target_cloud")) {
    cfg.target_cloud = parse_cloud(r.child("target_cloud"), cfg);
  } else {
    cfg.target_cloud.kind = CloudSpec::Kind::sample;
    cfg.target_cloud.n = cfg.particles.n;
  }
  if (cfg.initial.kind == DensitySpec::Kind::fit && cfg.particles.kind == CloudSpec::Kind::sample)
    r.fail("initial density 'fit' needs a particle cloud that is not sampled from it");
  if (cfg.target.kind == DensitySpec::Kind::fit && cfg.target_cloud.kind == CloudSpec::Kind::sample)
    r.fail("target density 'fit' needs a target cloud that is not sampled from it");

  if (r.has("tracked")) {
    const json& t = r.at("tracked");
    if (!t.is_array()) r.fail("'tracked' must be an array of points");
    for (const auto& p : t) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
        r.fail("'tracked' must be an array of points");
      cfg.tracked.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
  }

  const std::string integ = r.string("integrator", "euler");
  if (integ == "euler") cfg.integrator = Integrator::euler;
  else if (integ == "rk2") cfg.integrator = Integrator::rk2;
  else if (integ == "gf") cfg.integrator = Integrator::gf;
  else r.fail("unknown integrator '" + integ + "' (expected euler, rk2 or gf)");
  cfg.rk2_substeps = static_cast<int>(r.integer("rk2_substeps", cfg.rk2_substeps));
  require(cfg.rk2_substeps >= 1, r, "'rk2_substeps' must be positive");
  try {
    cfg.velocity_formula = velocity_formula_from_string(r.string("velocity_formula", "theorem"));
  } catch (const FormatError& e) {
    r.fail(e.what());
  }
  const std::string exit_policy = r.string("exit_policy", "project");
  if (exit_policy == "project") cfg.exit_policy = ExitPolicy::project;
  else if (exit_policy == "kill") cfg.exit_policy = ExitPolicy::kill;
  else r.fail("unknown exit_policy '" + exit_policy + "' (expected project or kill)");
  cfg.exit_tol = r.number("exit_tol", cfg.exit_tol);
  require(cfg.exit_tol > 0.0, r, "'exit_tol' must be positive");
  cfg.trace_steps = static_cast<int>(r.integer("trace_steps", cfg.trace_steps));
  require(cfg.trace_steps >= -1, r, "'trace_steps' must be -1 or nonnegative");

  cfg.supg = r.boolean("supg", cfg.supg);
  if (r.has("snapshot_times")) {
    const json& s = r.at("snapshot_times");
    if (!s.is_array()) r.fail("'snapshot_times' must be an array");
    for (const auto& v : s) {
      if (!v.is_number()) r.fail("'snapshot_times' must contain numbers");
      const double t = v.get<double>();
      if (t < 0.0 || t > cfg.time.T) r.fail("snapshot time outside [0, T]");
      cfg.snapshot_times.push_back(t);
    }
  }
  if (r.has("seed")) {
    const json& s = r.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      r.fail("'seed' must be a nonnegative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  cfg.output_dir = r.string("output_dir", cfg.output_dir);
  cfg.renormalize_rho0 = r.boolean("renormalize_rho0", cfg.renormalize_rho0);
  r.finish();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

json config_to_json(const RunConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  json domain = {{"x", {cfg.domain.x.lo, cfg.domain.x.hi}}, {"y", {cfg.domain.y.lo, cfg.domain.y.hi}}};
  if (cfg.domain.hole_radius > 0.0)
    domain["hole"] = {{"center", {cfg.domain.hole_center.x(), cfg.domain.hole_center.y()}},
                      {"radius", cfg.domain.hole_radius}};
  j["domain"] = domain;
  json mesh = json::object();
  if (cfg.mesh.target_h) mesh["target_h"] = *cfg.mesh.target_h;
  if (!cfg.mesh.file.empty()) mesh["file"] = cfg.mesh.file;
  j["mesh"] = mesh;
  j["fe_degree"] = cfg.fe_degree;
  if (cfg.target_nhf) j["target_nhf"] = *cfg.target_nhf;
  if (cfg.paper_K) j["paper_K"] = *cfg.paper_K;
  if (cfg.paper_Nhf) j["paper_Nhf"] = *cfg.paper_Nhf;
  j["time"] = {{"T", cfg.time.T}, {"K", cfg.time.K}, {"power", cfg.time.power}};
  j["initial"] = density_json(cfg.initial);
  j["target"] = density_json(cfg.target);
  j["density_fit"] = {{"k_min", cfg.density_fit.k_min},
                      {"k_max", cfg.density_fit.k_max},
                      {"cov_reg", cfg.density_fit.em.cov_reg},
                      {"max_iter", cfg.density_fit.em.max_iter},
                      {"tol", cfg.density_fit.em.tol}};
  j["boundary"] = {{"eps", cfg.boundary.eps},
                   {"delta", cfg.boundary.smoother.delta},
                   {"tol", cfg.boundary.smoother.tol},
                   {"sigma_beta", cfg.boundary.smoother.sigma_beta}};
  j["particles"] = cloud_json(cfg.particles);
  j["target_cloud"] = cloud_json(cfg.target_cloud);
  json tracked = json::array();
  for (const auto& p : cfg.tracked) tracked.push_back({p.x(), p.y()});
  j["tracked"] = tracked;
  j["integrator"] = to_string(cfg.integrator);
  j["rk2_substeps"] = cfg.rk2_substeps;
  j["velocity_formula"] = to_string(cfg.velocity_formula);
  j["exit_policy"] = cfg.exit_policy == ExitPolicy::project ? "project" : "kill";
  j["exit_tol"] = cfg.exit_tol;
  j["trace_steps"] = cfg.trace_steps;
  j["supg"] = cfg.supg;
  j["snapshot_times"] = cfg.snapshot_times;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["renormalize_rho0"] = cfg.renormalize_rho0;
  return j;
}

}  // namespace fpreg
