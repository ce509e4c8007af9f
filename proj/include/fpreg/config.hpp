#pragma once

#include "fpreg/boundary.hpp"
#include "fpreg/density.hpp"
#include "fpreg/error.hpp"
#include "fpreg/mesh.hpp"
#include "fpreg/particles.hpp"
#include "fpreg/point_cloud.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fpreg {

/// Configuration error, with the 1-based position in the document when the
/// JSON itself is malformed (0 otherwise).
class ConfigError : public FormatError {
 public:
  ConfigError(const std::string& what, int line = 0, int column = 0)
      : FormatError(what), line_(line), column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }
  const char* kind() const noexcept override { return "ConfigError"; }

 private:
  int line_;
  int column_;
};

struct MeshSpec {
  /// Mesh size for the generator; when absent it is chosen to approach
  /// `target_nhf` degrees of freedom.
  std::optional<double> target_h;
  /// Mesh file (JSON or Gmsh v2) replacing the generator.
  std::string file;
};

struct TimeSpec {
  double T = 1.0;
  int K = 100;
  double power = 1.5;
};

/// Initial or target density.
struct DensitySpec {
  enum class Kind { gaussian, gmm_file, fit };
  Kind kind = Kind::gaussian;
  Vec2 mean{0.0, 0.0};
  Mat2 cov = Mat2::Identity();
  std::string path;
};

/// Particle cloud: drawn from the associated density, read from CSV, or an
/// arc cloud.
struct CloudSpec {
  enum class Kind { sample, file, arc };
  Kind kind = Kind::sample;
  std::size_t n = 100;
  std::string path;
  ArcCloudParams arc;
};

struct FitSpec {
  int k_min = 1;
  int k_max = 8;
  EmOptions em;
};

struct BoundarySpec {
  double eps = 0.0;
  SmootherParams smoother;
};

enum class Integrator { euler, rk2, gf };
std::string to_string(Integrator i);

struct RunConfig {
  std::string name = "run";
  RectWithHole domain;
  MeshSpec mesh;
  int fe_degree = 2;
  std::optional<long> target_nhf;
  std::optional<long> paper_K;
  std::optional<long> paper_Nhf;
  TimeSpec time;
  DensitySpec initial;
  DensitySpec target;
  FitSpec density_fit;
  BoundarySpec boundary;
  CloudSpec particles;
  CloudSpec target_cloud;
  /// Extra particles whose distances are reported individually.
  std::vector<Vec2> tracked;
  Integrator integrator = Integrator::euler;
  int rk2_substeps = 2;
  VelocityFormula velocity_formula = VelocityFormula::theorem;
  ExitPolicy exit_policy = ExitPolicy::project;
  double exit_tol = 1e-3;
  /// Grid intervals to advect over; -1 runs them all.
  int trace_steps = -1;
  bool supg = true;
  std::vector<double> snapshot_times;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  bool renormalize_rho0 = true;
  /// Directory against which relative file paths are resolved.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& p) const;
};

/// Parses and validates a configuration document. Unknown keys, out-of-range
/// values and missing referenced files raise ConfigError.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Canonical echo of a parsed configuration.
nlohmann::json config_to_json(const RunConfig& cfg);

/// 1-based line and column of a byte offset.
std::pair<int, int> line_column(const std::string& text, std::size_t offset);

/// Independent stream of a base seed (splitmix64 of seed + stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace fpreg
