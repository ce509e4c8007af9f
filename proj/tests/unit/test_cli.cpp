#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string err;
};

fs::path workdir(const std::string& name) {
  const auto d = fs::temp_directory_path() / "fpreg_test_cli" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run fpreg(const std::string& args, const fs::path& dir) {
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + FPREG_CLI_PATH + "\" " + args + " 2> \"" + err.string() + "\" > /dev/null";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

// A small but complete scenario: coarse mesh, few steps.
json small_config() {
  return json::parse(R"({
    "name": "small",
    "domain": {"x": [-2, 2], "y": [-2, 2], "hole": {"center": [0, 0], "radius": 0.5}},
    "mesh": {"target_h": 0.5},
    "fe_degree": 2,
    "time": {"T": 0.5, "K": 6, "power": 1.5},
    "initial": {"type": "gaussian", "mean": [-1, 0], "cov": [[0.2, 0], [0, 0.2]]},
    "target": {"type": "gaussian", "mean": [1, 0], "cov": [[0.2, 0], [0, 0.2]]},
    "particles": {"source": "sample", "n": 30},
    "target_cloud": {"source": "sample", "n": 30},
    "integrator": "euler",
    "snapshot_times": [0.5],
    "seed": 3
  })");
}

fs::path write_config(const fs::path& dir, const json& cfg, const std::string& name = "config.json") {
  const auto p = dir / name;
  std::ofstream(p) << cfg.dump(2);
  return p;
}

std::string cfg_arg(const fs::path& cfg, const fs::path& out) {
  return "--config \"" + cfg.string() + "\" --out \"" + out.string() + "\"";
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("malformed config gives exit 2 with a position") {
  const auto dir = workdir("malformed");
  const auto p = dir / "bad.json";
  std::ofstream(p) << "{\n  \"name\": \"x\",\n  \"domain\": {\"x\": [0, 1],,}\n}\n";
  const auto r = fpreg("meshgen " + cfg_arg(p, dir / "out"), dir);
  CHECK(r.code == 2);
  REQUIRE(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  const auto j = json::parse(r.err);
  CHECK(j["exit_code"] == 2);
  CHECK(j["line"] == 3);
  CHECK(j["column"].get<int>() > 0);

  CHECK(fpreg("meshgen", dir).code == 2);
  CHECK(fpreg("frobnicate " + cfg_arg(p, dir), dir).code == 2);
  CHECK(fpreg("meshgen --config \"" + (dir / "absent.json").string() + "\"", dir).code == 2);
}

TEST_CASE("missing inputs give exit 2") {
  const auto dir = workdir("missing");
  auto cfg = small_config();
  cfg["mesh"] = {{"file", "no_such_mesh.json"}};
  auto r = fpreg("solve " + cfg_arg(write_config(dir, cfg), dir / "out"), dir);
  CHECK(r.code == 2);
  CHECK(json::parse(r.err)["message"].get<std::string>().find("no_such_mesh.json") != std::string::npos);

  // An empty points file.
  std::ofstream(dir / "empty.csv") << "";
  cfg = small_config();
  cfg["particles"] = {{"source", "file"}, {"path", "empty.csv"}};
  cfg["target_cloud"] = {{"source", "file"}, {"path", "empty.csv"}};
  cfg["initial"] = {{"type", "fit"}};
  r = fpreg("fitgmm " + cfg_arg(write_config(dir, cfg), dir / "out"), dir);
  CHECK(r.code == 2);
  CHECK_NOTHROW(json::parse(r.err));

  // trace and report before solve.
  const auto c = write_config(dir, small_config(), "small.json");
  CHECK(fpreg("trace " + cfg_arg(c, dir / "nothing"), dir).code == 2);
  CHECK(fpreg("report " + cfg_arg(c, dir / "nothing"), dir).code == 2);
}

TEST_CASE("meshgen writes hole tags only when there is a hole") {
  const auto dir = workdir("meshgen");
  auto cfg = small_config();
  REQUIRE(fpreg("meshgen " + cfg_arg(write_config(dir, cfg), dir / "with"), dir).code == 0);
  const auto with = json::parse(slurp(dir / "with" / "mesh.json"));
  CHECK(with["version"] == 1);
  CHECK(with["boundary"].dump().find("\"hole\"") != std::string::npos);

  cfg["domain"].erase("hole");
  REQUIRE(fpreg("meshgen " + cfg_arg(write_config(dir, cfg), dir / "square"), dir).code == 0);
  const auto square = json::parse(slurp(dir / "square" / "mesh.json"));
  CHECK(square["boundary"].dump().find("\"hole\"") == std::string::npos);
  CHECK(square["triangles"].size() > 0);
}

TEST_CASE("gencloud and fitgmm") {
  const auto dir = workdir("clouds");
  auto cfg = small_config();
  cfg["particles"] = {{"source", "arc"}, {"theta0", M_PI / 2}, {"dtheta", M_PI}, {"n", 141}, {"noise", 0.0}};
  cfg["target_cloud"] = {{"source", "arc"}, {"theta0", 3 * M_PI / 2}, {"dtheta", M_PI}, {"n", 141}, {"noise", 0.1}};
  cfg["domain"] = {{"x", {-4, 4}}, {"y", {-4, 4}}, {"hole", {{"center", {0, 0}}, {"radius", 0.5}}}};
  cfg["initial"] = {{"type", "fit"}};
  cfg["target"] = {{"type", "fit"}};
  cfg["density_fit"] = {{"k_min", 1}, {"k_max", 1}};
  const auto c = write_config(dir, cfg);
  REQUIRE(fpreg("gencloud " + cfg_arg(c, dir / "out"), dir).code == 0);
  const auto rows = csv_rows(dir / "out" / "points.csv");
  REQUIRE(rows.size() == 142);
  CHECK(std::abs(std::stod(rows[1][0])) <= 1e-12);
  CHECK(std::stod(rows[1][1]) == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 1; i < rows.size(); ++i)
    CHECK(std::hypot(std::stod(rows[i][0]), std::stod(rows[i][1])) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(csv_rows(dir / "out" / "target_points.csv").size() == 142);

  // k = 1..1: the closed-form single Gaussian.
  REQUIRE(fpreg("fitgmm " + cfg_arg(c, dir / "out"), dir).code == 0);
  const auto g = json::parse(slurp(dir / "out" / "gmm_initial.json"));
  const auto report = json::parse(slurp(dir / "out" / "fit_report.json"));
  CHECK(report["initial"]["k"] == 1);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) mx += std::stod(rows[i][0]), my += std::stod(rows[i][1]);
  mx /= 141, my /= 141;
  const auto mean = g["means"][0];
  CHECK(mean[0].get<double>() == doctest::Approx(mx).epsilon(1e-9));
  CHECK(mean[1].get<double>() == doctest::Approx(my).epsilon(1e-9));

  // The seed flag changes a noisy cloud and nothing else.
  REQUIRE(fpreg("gencloud " + cfg_arg(c, dir / "seeded") + " --seed 99", dir).code == 0);
  CHECK(slurp(dir / "seeded" / "points.csv") == slurp(dir / "out" / "points.csv"));
  CHECK(slurp(dir / "seeded" / "target_points.csv") != slurp(dir / "out" / "target_points.csv"));
}

TEST_CASE("solve, trace and report pipeline") {
  const auto dir = workdir("pipeline");
  const auto c = write_config(dir, small_config());
  const auto out = dir / "out";
  REQUIRE(fpreg("solve " + cfg_arg(c, out), dir).code == 0);
  for (const char* f : {"mesh.json", "V.fpfld", "diagnostics.csv", "run.json", "rho_000000.fpfld", "rho_000006.fpfld"})
    CHECK(fs::exists(out / f));
  CHECK(csv_rows(out / "diagnostics.csv").size() == 8);
  REQUIRE(fpreg("trace " + cfg_arg(c, out), dir).code == 0);
  REQUIRE(fpreg("report " + cfg_arg(c, out), dir).code == 0);
  const auto report = json::parse(slurp(out / "report.json"));
  for (const char* key : {"final_l1", "final_kl", "hausdorff_final_target", "exits", "svg"}) CHECK(report.contains(key));
  CHECK(report["final_l1"].is_number());
  CHECK(report["final_kl"].is_number());
  CHECK(report["hausdorff_final_target"].is_number());
  const auto summary = json::parse(slurp(out / "summary.json"));
  CHECK(summary["steps_advected"] == 6);

  // Identical inputs give byte-identical artifacts.
  const auto again = dir / "again";
  REQUIRE(fpreg("solve " + cfg_arg(c, again), dir).code == 0);
  REQUIRE(fpreg("trace " + cfg_arg(c, again), dir).code == 0);
  REQUIRE(fpreg("report " + cfg_arg(c, again), dir).code == 0);
  CHECK(slurp(out / "report.json") == slurp(again / "report.json"));
  for (const auto& svg : report["svg"]) {
    const auto name = svg.get<std::string>();
    CHECK(slurp(out / name) == slurp(again / name));
  }
  CHECK(slurp(out / "trajectories.csv") == slurp(again / "trajectories.csv"));

  // A trace over zero steps returns the input cloud.
  auto cfg = small_config();
  cfg["trace_steps"] = 0;
  REQUIRE(fpreg("trace " + cfg_arg(write_config(dir, cfg, "zero.json"), out), dir).code == 0);
  const auto traj = csv_rows(out / "trajectories.csv");
  const auto points = csv_rows(out / "points.csv");
  REQUIRE(traj.size() == points.size());
  for (std::size_t i = 1; i < traj.size(); ++i) {
    CHECK(traj[i][0] == "0");
    CHECK(std::stod(traj[i][3]) == std::stod(points[i][0]));
    CHECK(std::stod(traj[i][4]) == std::stod(points[i][1]));
  }

  // A different grid than the stored trajectory is rejected.
  cfg = small_config();
  cfg["time"]["K"] = 7;
  CHECK(fpreg("trace " + cfg_arg(write_config(dir, cfg, "k7.json"), out), dir).code == 2);
}

TEST_CASE("report draws one vertex per diagnostics row") {
  const auto dir = workdir("report");
  const auto out = dir / "out";
  fs::create_directories(out);
  std::ofstream(out / "diagnostics.csv") << "k,t,mass,l1_error,kl,min_nodal\n"
                                            "0,0,1,0.9,0.5,0\n"
                                            "1,0.5,1,0.5,0.2,0\n"
                                            "2,1,1,0.2,0.05,0\n";
  std::ofstream(out / "summary.json") << R"({"integrator": "euler", "exits": 0})";
  const auto c = write_config(dir, small_config());
  REQUIRE(fpreg("report " + cfg_arg(c, out), dir).code == 0);
  const std::string svg = slurp(out / "error_curve.svg");
  const std::regex poly("<polyline[^>]*points=\"([^\"]*)\"");
  std::smatch m;
  REQUIRE(std::regex_search(svg, m, poly));
  std::istringstream pts(m[1].str());
  std::string token;
  int vertices = 0;
  while (pts >> token) ++vertices;
  CHECK(vertices == 3);
  const auto report = json::parse(slurp(out / "report.json"));
  CHECK(report["final_l1"] == 0.2);
  CHECK(report["final_kl"] == 0.05);
  CHECK(report["exits"] == 0);
  CHECK(report["hausdorff_final_target"].is_null());
}
