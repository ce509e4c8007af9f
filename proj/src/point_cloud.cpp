#include "fpreg/point_cloud.hpp"

#include "fpreg/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>

namespace fpreg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& s, std::size_t line) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v))
    throw FormatError("points CSV line " + std::to_string(line) + ": bad number '" + t + "'");
  return v;
}

}  // namespace

std::vector<Vec2> read_points_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::vector<Vec2> out;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (!header) {
      std::string compact;
      for (char c : t)
        if (c != ' ') compact += c;
      if (compact != "x,y") throw FormatError("points CSV must start with the header 'x,y'");
      header = true;
      continue;
    }
    const auto comma = t.find(',');
    if (comma == std::string::npos || t.find(',', comma + 1) != std::string::npos)
      throw FormatError("points CSV line " + std::to_string(lineno) + ": expected two columns");
    out.emplace_back(parse_number(t.substr(0, comma), lineno), parse_number(t.substr(comma + 1), lineno));
  }
  if (!header) throw FormatError("points CSV is empty");
  return out;
}

std::vector<Vec2> read_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_points_csv(in);
}

void write_points_csv(std::ostream& out, const std::vector<Vec2>& points) {
  out << "x,y\n";
  char buf[64];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.x(), p.y());
    out << buf;
  }
}

void write_points_csv(const std::filesystem::path& path, const std::vector<Vec2>& points) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_points_csv(out, points);
}

std::vector<Vec2> generate_arc_cloud(const ArcCloudParams& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<Vec2> out;
  out.reserve(params.n);
  for (std::size_t i = 0; i < params.n; ++i) {
    const double frac = params.n > 1 ? static_cast<double>(i) / static_cast<double>(params.n - 1) : 0.0;
    const double theta = params.theta0 + params.dtheta * frac;
    const double u = uniform(rng);
    const double v = uniform(rng);
    out.emplace_back(std::cos(theta) + params.noise * u, std::sin(theta) + params.noise * v);
  }
  return out;
}

}  // namespace fpreg
