#include "fpreg/error.hpp"
#include "fpreg/mesh.hpp"
#include "fpreg/mesh_io.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

using namespace fpreg;

namespace {

RectWithHole cylinder() { return {}; }

RectWithHole unit_square() {
  RectWithHole d;
  d.x = {0.0, 1.0};
  d.y = {0.0, 1.0};
  d.hole_radius = 0.0;
  return d;
}

// Independent invariant check: areas, edge multiplicities, closed boundary loops.
void check_invariants(const TriangleMesh& m) {
  std::map<std::pair<int, int>, int> count;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles()[t];
    const auto& v = m.vertices();
    CHECK(orient2d(v[tri[0]], v[tri[1]], v[tri[2]]) > 0.0);
    for (int e = 0; e < 3; ++e) {
      int a = tri[e], b = tri[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      ++count[{a, b}];
    }
  }
  std::map<int, int> boundary_degree;
  int boundary_edges = 0;
  for (const auto& [edge, c] : count) {
    CHECK((c == 1 || c == 2));
    if (c == 1) {
      ++boundary_edges;
      ++boundary_degree[edge.first];
      ++boundary_degree[edge.second];
    }
  }
  CHECK(boundary_edges == static_cast<int>(m.boundary().size()));
  for (const auto& [v, d] : boundary_degree) CHECK(d == 2);
}

bool inside_triangle(const TriangleMesh& m, int t, const Vec2& x) {
  const auto& tri = m.triangles()[t];
  const auto& v = m.vertices();
  const double tol = -1e-12;
  return orient2d(v[tri[0]], v[tri[1]], x) >= tol && orient2d(v[tri[1]], v[tri[2]], x) >= tol &&
         orient2d(v[tri[2]], v[tri[0]], x) >= tol;
}

}  // namespace

TEST_CASE("cylinder mesh satisfies all invariants and tags the hole") {
  const auto m = generate_rect_with_hole(cylinder(), 0.25);
  check_invariants(m);
  CHECK(m.has_tag(BoundaryTag::hole));
  CHECK(m.has_tag(BoundaryTag::outer));
  CHECK(m.max_diameter() <= 2 * 0.25);
  for (const auto& f : m.boundary()) {
    if (f.tag != BoundaryTag::hole) continue;
    for (int v : f.vertices) CHECK(std::abs(m.vertices()[v].norm() - 0.5) <= 1e-12);
  }
}

TEST_CASE("radius zero gives an outer-only unit square") {
  const auto m = generate_rect_with_hole(unit_square(), 0.1);
  check_invariants(m);
  CHECK_FALSE(m.has_tag(BoundaryTag::hole));
  CHECK(m.area() == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("hole touching the rectangle is rejected") {
  RectWithHole d = cylinder();
  d.hole_center = {3.6, 0.0};
  CHECK_THROWS_AS(generate_rect_with_hole(d, 0.25), InvalidGeometry);
  d = cylinder();
  CHECK_THROWS_AS(generate_rect_with_hole(d, 0.0), InvalidGeometry);
}

TEST_CASE("mesh area error is bounded by C h^2") {
  // The hole chords depend on how the grid cuts the circle, so the error is
  // not monotone level to level; it is O(h^2) with a bounded constant.
  const double exact = 64.0 - std::numbers::pi * 0.25;
  const std::vector<double> hs{0.4, 0.2, 0.1, 0.05};
  std::vector<double> c;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double h : hs) {
    const double err = std::abs(generate_rect_with_hole(cylinder(), h).area() - exact) / exact;
    c.push_back(err / (h * h));
    const double x = std::log(h), y = std::log(err);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  const double n = static_cast<double>(hs.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  MESSAGE("fitted area convergence rate " << slope);
  CHECK(slope >= 1.7);
  CHECK(*std::max_element(c.begin(), c.end()) <= 5.0 * *std::min_element(c.begin(), c.end()));
}

TEST_CASE("halving h at least quadruples the triangle count") {
  const auto a = generate_rect_with_hole(cylinder(), 0.4);
  const auto b = generate_rect_with_hole(cylinder(), 0.2);
  check_invariants(b);
  CHECK(b.num_triangles() >= 4 * a.num_triangles());
}

TEST_CASE("locate_point special cases") {
  const auto m = generate_rect_with_hole(cylinder(), 0.5);
  const Vec2 c = m.centroid(0);
  const auto loc = locate_point(m, c);
  REQUIRE(loc.inside());
  CHECK(loc.triangle == 0);
  for (double b : loc.barycentric) CHECK(b == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  const int v = m.triangles()[5][1];
  const auto lv = locate_point(m, m.vertices()[v]);
  REQUIRE(lv.inside());
  double maxb = 0.0;
  for (double b : lv.barycentric) maxb = std::max(maxb, b);
  CHECK(maxb == doctest::Approx(1.0).epsilon(1e-12));

  const auto out = locate_point(m, {5.0, 0.0});
  CHECK_FALSE(out.inside());
  CHECK(out.nearest_boundary.x() == doctest::Approx(4.0));
  CHECK_FALSE(locate_point(m, {0.0, 0.0}).inside());
}

TEST_CASE("locate_point agrees with an exhaustive point-in-triangle scan on 1000 points") {
  const auto m = generate_rect_with_hole(cylinder(), 0.25);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(m.num_triangles()) - 1);
  int tested = 0;
  while (tested < 1000) {
    const Vec2 x{u(rng), u(rng)};
    if (x.norm() <= 0.5) continue;
    ++tested;
    const auto a = locate_point(m, x, pick(rng));
    const auto b = locate_point(m, x);
    REQUIRE(a.inside());
    CHECK(inside_triangle(m, a.triangle, x));
    CHECK(b.inside());
    // Independent of hint: same triangle unless x is on a shared edge.
    if (a.triangle != b.triangle) CHECK(inside_triangle(m, b.triangle, x));
    const auto& tri = m.triangles()[a.triangle];
    Vec2 rec = Vec2::Zero();
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) {
      CHECK(a.barycentric[i] >= 0.0);
      CHECK(a.barycentric[i] <= 1.0);
      sum += a.barycentric[i];
      rec += a.barycentric[i] * m.vertices()[tri[i]];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    CHECK((rec - x).norm() <= 1e-10);
  }
}

TEST_CASE("boundary distance") {
  const double h = 0.1;
  const auto m = generate_rect_with_hole(cylinder(), h);
  CHECK(boundary_distance(m, {0.0, 4.0 - 0.3}) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(boundary_distance(m, m.vertices()[m.boundary()[0].vertices[0]]) == doctest::Approx(0.0));
  for (double d : {0.01, 0.05, 0.2}) {
    const double got = boundary_distance(m, {0.0, 0.5 + d});
    CHECK(std::abs(got - d) <= h * h / (2 * 0.5) + 1e-12);
  }
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.9, 3.9);
  for (int i = 0; i < 300; ++i) {
    Vec2 x{u(rng), u(rng)}, y{u(rng), u(rng)};
    if (x.norm() < 0.6 || y.norm() < 0.6) continue;
    CHECK(std::abs(boundary_distance(m, x) - boundary_distance(m, y)) <= (x - y).norm() + 1e-12);
  }
}

TEST_CASE("mesh JSON round trip and Gmsh reader") {
  const auto m = generate_rect_with_hole(cylinder(), 0.8);
  const auto r = mesh_from_json(mesh_to_json(m));
  CHECK(r.num_vertices() == m.num_vertices());
  CHECK(r.num_triangles() == m.num_triangles());
  CHECK(r.has_tag(BoundaryTag::hole));
  CHECK(mesh_to_json(r) == mesh_to_json(m));

  // Unit square in two clockwise triangles, left edge in physical group 2.
  std::istringstream msh(R"($MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
$EndNodes
$Elements
3
1 1 2 2 1 4 1
2 2 2 0 1 1 3 2
3 2 2 0 1 1 4 3
$EndElements
)");
  const auto g = read_gmsh_v2(msh);
  check_invariants(g);
  CHECK(g.num_triangles() == 2);
  CHECK(g.area() == doctest::Approx(1.0));
  int hole_edges = 0;
  for (const auto& f : g.boundary()) hole_edges += f.tag == BoundaryTag::hole;
  CHECK(hole_edges == 1);

  nlohmann::json bad = mesh_to_json(m);
  bad["triangles"][0] = {0, 0, 1};
  CHECK_THROWS_AS(mesh_from_json(bad), InvalidMesh);
}
