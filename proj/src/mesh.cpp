#include "fpreg/mesh.hpp"

#include "fpreg/error.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>

namespace fpreg {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

}  // namespace

std::string_view to_string(BoundaryTag tag) {
  return tag == BoundaryTag::hole ? "hole" : "outer";
}

BoundaryTag boundary_tag_from_string(std::string_view s) {
  if (s == "outer") return BoundaryTag::outer;
  if (s == "hole") return BoundaryTag::hole;
  throw FormatError("unknown boundary tag '" + std::string(s) + "'");
}

TriangleMesh::TriangleMesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
                           const std::vector<BoundaryFacet>& facets)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  if (triangles_.empty()) throw InvalidMesh("mesh has no triangles");
  const int nv = static_cast<int>(vertices_.size());
  for (const auto& tri : triangles_)
    for (int v : tri)
      if (v < 0 || v >= nv) throw InvalidMesh("triangle references vertex out of range");
  build_topology(facets);
  validate();
}

void TriangleMesh::build_topology(const std::vector<BoundaryFacet>& facets) {
  const std::size_t nt = triangles_.size();
  std::unordered_map<std::uint64_t, int> edge_index;
  edge_index.reserve(nt * 2);
  triangle_edges_.assign(nt, {-1, -1, -1});
  neighbors_.assign(nt, {kNoNeighbor, kNoNeighbor, kNoNeighbor});

  for (std::size_t t = 0; t < nt; ++t) {
    for (int e = 0; e < 3; ++e) {
      const int a = triangles_[t][e];
      const int b = triangles_[t][(e + 1) % 3];
      if (a == b) throw InvalidMesh("triangle " + std::to_string(t) + " has repeated vertices");
      auto [it, inserted] = edge_index.try_emplace(edge_key(a, b), static_cast<int>(edges_.size()));
      if (inserted) {
        edges_.push_back({std::min(a, b), std::max(a, b)});
        edge_triangles_.push_back({static_cast<int>(t), kNoNeighbor});
      } else {
        auto& owners = edge_triangles_[it->second];
        if (owners[1] != kNoNeighbor)
          throw InvalidMesh("edge shared by more than two triangles");
        owners[1] = static_cast<int>(t);
      }
      triangle_edges_[t][e] = it->second;
    }
  }

  for (std::size_t t = 0; t < nt; ++t) {
    for (int e = 0; e < 3; ++e) {
      const auto& owners = edge_triangles_[triangle_edges_[t][e]];
      neighbors_[t][e] = owners[0] == static_cast<int>(t) ? owners[1] : owners[0];
    }
  }

  std::unordered_map<std::uint64_t, BoundaryTag> tags;
  for (const auto& f : facets) {
    auto it = edge_index.find(edge_key(f.vertices[0], f.vertices[1]));
    if (it == edge_index.end() || edge_triangles_[it->second][1] != kNoNeighbor)
      throw InvalidMesh("listed boundary facet is not a boundary edge of the triangulation");
    tags[it->first] = f.tag;
  }

  edge_tag_.assign(edges_.size(), BoundaryTag::outer);
  boundary_vertex_.assign(vertices_.size(), false);
  // Walk triangles in order so facets inherit the counter-clockwise orientation.
  for (std::size_t t = 0; t < nt; ++t) {
    for (int e = 0; e < 3; ++e) {
      if (neighbors_[t][e] != kNoNeighbor) continue;
      const int a = triangles_[t][e];
      const int b = triangles_[t][(e + 1) % 3];
      BoundaryTag tag = BoundaryTag::outer;
      if (auto it = tags.find(edge_key(a, b)); it != tags.end()) tag = it->second;
      edge_tag_[triangle_edges_[t][e]] = tag;
      boundary_.push_back({{a, b}, tag});
      boundary_vertex_[a] = true;
      boundary_vertex_[b] = true;
    }
  }

  bboxes_.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    Vec2 lo = vertices_[triangles_[t][0]], hi = lo;
    for (int i = 1; i < 3; ++i) {
      lo = lo.cwiseMin(vertices_[triangles_[t][i]]);
      hi = hi.cwiseMax(vertices_[triangles_[t][i]]);
    }
    bboxes_[t] = {lo, hi};
  }
}

void TriangleMesh::validate() const {
  for (std::size_t t = 0; t < triangles_.size(); ++t)
    if (!(signed_area(static_cast<int>(t)) > 0.0))
      throw InvalidMesh("triangle " + std::to_string(t) + " has non-positive signed area");

  // Interior edges must be traversed in opposite directions by their two triangles.
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto& owners = edge_triangles_[e];
    if (owners[1] == kNoNeighbor) continue;
    auto direction = [&](int t) {
      for (int l = 0; l < 3; ++l)
        if (triangle_edges_[t][l] == static_cast<int>(e)) return triangles_[t][l];
      return -1;
    };
    if (direction(owners[0]) == direction(owners[1]))
      throw InvalidMesh("inconsistent triangle orientation across edge " + std::to_string(e));
  }

  std::vector<int> incident(vertices_.size(), 0);
  for (const auto& f : boundary_) {
    ++incident[f.vertices[0]];
    ++incident[f.vertices[1]];
  }
  for (std::size_t v = 0; v < vertices_.size(); ++v)
    if (incident[v] != 0 && incident[v] != 2)
      throw InvalidMesh("boundary vertex " + std::to_string(v) + " is not on a simple closed loop");
}

double TriangleMesh::signed_area(int t) const {
  const auto& tri = triangles_[t];
  return 0.5 * orient2d(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
}

double TriangleMesh::area() const {
  double a = 0.0;
  for (std::size_t t = 0; t < triangles_.size(); ++t) a += signed_area(static_cast<int>(t));
  return a;
}

double TriangleMesh::diameter(int t) const {
  const auto& tri = triangles_[t];
  double d = 0.0;
  for (int e = 0; e < 3; ++e)
    d = std::max(d, (vertices_[tri[e]] - vertices_[tri[(e + 1) % 3]]).norm());
  return d;
}

double TriangleMesh::max_diameter() const {
  double d = 0.0;
  for (std::size_t t = 0; t < triangles_.size(); ++t) d = std::max(d, diameter(static_cast<int>(t)));
  return d;
}

Vec2 TriangleMesh::centroid(int t) const {
  const auto& tri = triangles_[t];
  return (vertices_[tri[0]] + vertices_[tri[1]] + vertices_[tri[2]]) / 3.0;
}

bool TriangleMesh::has_tag(BoundaryTag tag) const {
  for (const auto& f : boundary_)
    if (f.tag == tag) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Generation

namespace {

class HoleCutter {
 public:
  HoleCutter(std::vector<Vec2>& vertices, Vec2 center, double radius)
      : vertices_(vertices), center_(center), radius_(radius) {}

  double level(int v) const { return level_[v]; }

  void compute_levels(const std::vector<bool>& snappable, double snap_distance) {
    level_.resize(vertices_.size());
    for (std::size_t v = 0; v < vertices_.size(); ++v) {
      Vec2 d = vertices_[v] - center_;
      double r = d.norm();
      double phi = r - radius_;
      if (snappable[v] && std::abs(phi) < snap_distance) {
        if (r == 0.0) d = Vec2(1.0, 0.0), r = 1.0;
        vertices_[v] = center_ + radius_ * d / r;
        phi = 0.0;
      }
      level_[v] = phi;
    }
  }

  /// Vertex on the circle where edge (a, b) crosses it; shared between the
  /// two triangles of the edge.
  int crossing(int a, int b) {
    auto key = edge_key(a, b);
    if (auto it = crossings_.find(key); it != crossings_.end()) return it->second;
    const Vec2 pa = vertices_[a], pb = vertices_[b];
    const Vec2 d = pb - pa, f = pa - center_;
    const double qa = d.squaredNorm(), qb = 2.0 * f.dot(d), qc = f.squaredNorm() - radius_ * radius_;
    const double disc = std::max(0.0, qb * qb - 4.0 * qa * qc);
    const double sq = std::sqrt(disc);
    double t1 = (-qb - sq) / (2.0 * qa), t2 = (-qb + sq) / (2.0 * qa);
    double t = (t1 >= 0.0 && t1 <= 1.0) ? t1 : t2;
    t = std::clamp(t, 0.0, 1.0);
    Vec2 p = pa + t * d - center_;
    p = center_ + radius_ * p / p.norm();
    const int id = static_cast<int>(vertices_.size());
    vertices_.push_back(p);
    level_.push_back(0.0);
    crossings_.emplace(key, id);
    return id;
  }

 private:
  std::vector<Vec2>& vertices_;
  Vec2 center_;
  double radius_;
  std::vector<double> level_;
  std::unordered_map<std::uint64_t, int> crossings_;
};

int sign_of(double phi) { return phi > 0.0 ? 1 : (phi < 0.0 ? -1 : 0); }

void laplacian_pass(std::vector<Vec2>& vertices, const std::vector<std::array<int, 3>>& triangles,
                    const std::vector<bool>& movable) {
  const std::size_t nv = vertices.size();
  std::vector<Vec2> sum(nv, Vec2::Zero());
  std::vector<int> count(nv, 0);
  for (const auto& tri : triangles)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j) {
          sum[tri[i]] += vertices[tri[j]];
          ++count[tri[i]];
        }
  std::vector<Vec2> old = vertices;
  for (std::size_t v = 0; v < nv; ++v)
    if (movable[v] && count[v] > 0) vertices[v] = sum[v] / count[v];

  // Undo moves around any triangle that lost quality until the mesh is valid.
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& tri : triangles) {
      const double before = orient2d(old[tri[0]], old[tri[1]], old[tri[2]]);
      const double after = orient2d(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
      if (after < 0.25 * before) {
        for (int v : tri)
          if (vertices[v] != old[v]) {
            vertices[v] = old[v];
            changed = true;
          }
      }
    }
  }
}

}  // namespace

TriangleMesh generate_rect_with_hole(const RectWithHole& domain, double target_h) {
  if (!(target_h > 0.0)) throw InvalidGeometry("target_h must be positive");
  if (!(domain.x.length() > 0.0) || !(domain.y.length() > 0.0))
    throw InvalidGeometry("rectangle must have positive extent");
  const double radius = domain.hole_radius;
  const Vec2 c = domain.hole_center;
  if (radius < 0.0) throw InvalidGeometry("hole radius must be nonnegative");
  if (radius > 0.0 && !(c.x() - radius > domain.x.lo && c.x() + radius < domain.x.hi &&
                        c.y() - radius > domain.y.lo && c.y() + radius < domain.y.hi))
    throw InvalidGeometry("hole must lie strictly inside the rectangle");

  const int nx = std::max(1, static_cast<int>(std::ceil(domain.x.length() / target_h - 1e-9)));
  const int ny = std::max(1, static_cast<int>(std::ceil(domain.y.length() / target_h - 1e-9)));
  const double hx = domain.x.length() / nx, hy = domain.y.length() / ny;

  std::vector<Vec2> vertices;
  std::vector<bool> on_rect;
  vertices.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      double x = i == nx ? domain.x.hi : domain.x.lo + i * hx;
      double y = j == ny ? domain.y.hi : domain.y.lo + j * hy;
      vertices.emplace_back(x, y);
      on_rect.push_back(i == 0 || j == 0 || i == nx || j == ny);
    }
  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };

  // Alternating diagonals keep the pattern mirror-symmetric for even cell counts.
  std::vector<std::array<int, 3>> grid;
  grid.reserve(static_cast<std::size_t>(2) * nx * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int a = vid(i, j), b = vid(i + 1, j), cc = vid(i + 1, j + 1), d = vid(i, j + 1);
      if ((i + j) % 2 == 0) {
        grid.push_back({a, b, cc});
        grid.push_back({a, cc, d});
      } else {
        grid.push_back({a, b, d});
        grid.push_back({b, cc, d});
      }
    }

  if (radius == 0.0) return TriangleMesh(std::move(vertices), std::move(grid));

  const double h = std::min(hx, hy);
  HoleCutter cutter(vertices, c, radius);
  std::vector<bool> snappable(on_rect.size());
  for (std::size_t v = 0; v < on_rect.size(); ++v) snappable[v] = !on_rect[v];
  cutter.compute_levels(snappable, 0.25 * h);

  std::vector<std::array<int, 3>> kept;
  kept.reserve(grid.size());
  for (const auto& tri : grid) {
    int pos = 0, neg = 0;
    for (int v : tri) {
      const int s = sign_of(cutter.level(v));
      pos += s > 0;
      neg += s < 0;
    }
    if (neg == 0) {
      if (pos == 0) {
        const Vec2 g = (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]) / 3.0;
        if ((g - c).norm() < radius) continue;
      }
      kept.push_back(tri);
      continue;
    }
    if (pos == 0) continue;

    // Clip the triangle against the disk, keeping the outside part.
    std::vector<int> poly;
    for (int e = 0; e < 3; ++e) {
      const int u = tri[e], w = tri[(e + 1) % 3];
      const int su = sign_of(cutter.level(u)), sw = sign_of(cutter.level(w));
      if (su >= 0) poly.push_back(u);
      if (su * sw < 0) poly.push_back(cutter.crossing(u, w));
    }
    if (poly.size() == 3) {
      kept.push_back({poly[0], poly[1], poly[2]});
    } else if (poly.size() == 4) {
      const double d02 = (vertices[poly[0]] - vertices[poly[2]]).norm();
      const double d13 = (vertices[poly[1]] - vertices[poly[3]]).norm();
      if (d02 <= d13) {
        kept.push_back({poly[0], poly[1], poly[2]});
        kept.push_back({poly[0], poly[2], poly[3]});
      } else {
        kept.push_back({poly[1], poly[2], poly[3]});
        kept.push_back({poly[1], poly[3], poly[0]});
      }
    }
  }

  // Drop vertices that no longer belong to any triangle.
  std::vector<int> remap(vertices.size(), -1);
  std::vector<Vec2> used;
  std::vector<double> levels;
  for (auto& tri : kept)
    for (int& v : tri) {
      if (remap[v] < 0) {
        remap[v] = static_cast<int>(used.size());
        used.push_back(vertices[v]);
        levels.push_back(cutter.level(v));
      }
      v = remap[v];
    }

  // Boundary vertices are those on a boundary edge; find them before smoothing.
  {
    TriangleMesh raw(used, kept);
    std::vector<bool> movable(used.size(), false);
    for (std::size_t v = 0; v < used.size(); ++v)
      movable[v] = !raw.is_boundary_vertex(static_cast<int>(v)) && levels[v] < 2.0 * h;
    laplacian_pass(used, kept, movable);
  }

  std::vector<BoundaryFacet> facets;
  {
    TriangleMesh topo(used, kept);
    auto on_circle = [&](int v) { return std::abs((used[v] - c).norm() - radius) <= 1e-12 * std::max(1.0, radius); };
    for (const auto& f : topo.boundary())
      if (on_circle(f.vertices[0]) && on_circle(f.vertices[1]))
        facets.push_back({f.vertices, BoundaryTag::hole});
  }
  return TriangleMesh(std::move(used), std::move(kept), facets);
}

// ---------------------------------------------------------------------------
// Queries

std::array<double, 3> barycentric(const TriangleMesh& mesh, int t, const Vec2& x) {
  const auto& tri = mesh.triangles()[t];
  const auto& v = mesh.vertices();
  const Vec2& a = v[tri[0]];
  const Vec2& b = v[tri[1]];
  const Vec2& c = v[tri[2]];
  const double total = orient2d(a, b, c);
  const double l0 = orient2d(x, b, c) / total;
  const double l1 = orient2d(a, x, c) / total;
  return {l0, l1, 1.0 - l0 - l1};
}

namespace {

constexpr double kBaryTol = 1e-12;

PointLocation inside_at(int t, std::array<double, 3> bary) {
  double sum = 0.0;
  for (double& l : bary) {
    l = std::clamp(l, 0.0, 1.0);
    sum += l;
  }
  for (double& l : bary) l /= sum;
  PointLocation loc;
  loc.triangle = t;
  loc.barycentric = bary;
  return loc;
}

double min_of(const std::array<double, 3>& b) { return std::min({b[0], b[1], b[2]}); }

}  // namespace

PointLocation locate_point_exhaustive(const TriangleMesh& mesh, const Vec2& x) {
  int best = -1;
  double best_min = -std::numeric_limits<double>::infinity();
  std::array<double, 3> best_bary{};
  const int nt = static_cast<int>(mesh.num_triangles());
  for (int t = 0; t < nt; ++t) {
    const auto& box = mesh.bbox(t);
    const double slack = 1e-9 * (box[1] - box[0]).norm();
    if (x.x() < box[0].x() - slack || x.x() > box[1].x() + slack || x.y() < box[0].y() - slack ||
        x.y() > box[1].y() + slack)
      continue;
    auto b = barycentric(mesh, t, x);
    const double m = min_of(b);
    if (m > best_min) {
      best_min = m;
      best = t;
      best_bary = b;
    }
  }
  if (best >= 0 && best_min >= -kBaryTol) return inside_at(best, best_bary);
  PointLocation out;
  out.nearest_boundary = nearest_boundary_point(mesh, x).point;
  return out;
}

PointLocation locate_point(const TriangleMesh& mesh, const Vec2& x, std::optional<int> hint) {
  const int nt = static_cast<int>(mesh.num_triangles());
  int t = (hint && *hint >= 0 && *hint < nt) ? *hint : 0;
  const auto& neighbors = mesh.neighbors();
  for (int steps = 0; steps < nt; ++steps) {
    auto b = barycentric(mesh, t, x);
    int worst = 0;
    for (int i = 1; i < 3; ++i)
      if (b[i] < b[worst]) worst = i;
    if (b[worst] >= -kBaryTol) return inside_at(t, b);
    // Local edge (worst+1) is the one opposite vertex `worst`.
    const int next = neighbors[t][(worst + 1) % 3];
    if (next == TriangleMesh::kNoNeighbor) break;
    t = next;
  }
  return locate_point_exhaustive(mesh, x);
}

BoundaryProjection nearest_boundary_point(const TriangleMesh& mesh, const Vec2& x) {
  BoundaryProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  const auto& v = mesh.vertices();
  const auto& facets = mesh.boundary();
  for (std::size_t f = 0; f < facets.size(); ++f) {
    const Vec2 p = closest_on_segment(x, v[facets[f].vertices[0]], v[facets[f].vertices[1]]);
    const double d = (p - x).norm();
    if (d < best.distance) {
      best.distance = d;
      best.point = p;
      best.facet = static_cast<int>(f);
    }
  }
  return best;
}

double boundary_distance(const TriangleMesh& mesh, const Vec2& x) {
  return nearest_boundary_point(mesh, x).distance;
}

}  // namespace fpreg
