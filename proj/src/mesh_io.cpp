#include "fpreg/mesh_io.hpp"

#include "fpreg/error.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <unordered_map>

namespace fpreg {

using nlohmann::json;

json mesh_to_json(const TriangleMesh& mesh) {
  json doc;
  doc["version"] = 1;
  json verts = json::array();
  for (const auto& v : mesh.vertices()) verts.push_back({v.x(), v.y()});
  doc["vertices"] = std::move(verts);
  json tris = json::array();
  for (const auto& t : mesh.triangles()) tris.push_back({t[0], t[1], t[2]});
  doc["triangles"] = std::move(tris);
  json boundary = json::array();
  for (const auto& f : mesh.boundary())
    boundary.push_back({{"edge", {f.vertices[0], f.vertices[1]}}, {"tag", std::string(to_string(f.tag))}});
  doc["boundary"] = std::move(boundary);
  return doc;
}

TriangleMesh mesh_from_json(const json& doc) {
  try {
    if (doc.at("version").get<int>() != 1) throw FormatError("unsupported mesh version");
    std::vector<Vec2> vertices;
    for (const auto& v : doc.at("vertices")) vertices.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
    std::vector<std::array<int, 3>> triangles;
    for (const auto& t : doc.at("triangles"))
      triangles.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>()});
    std::vector<BoundaryFacet> facets;
    if (doc.contains("boundary"))
      for (const auto& f : doc.at("boundary"))
        facets.push_back({{f.at("edge").at(0).get<int>(), f.at("edge").at(1).get<int>()},
                          boundary_tag_from_string(f.at("tag").get<std::string>())});
    return TriangleMesh(std::move(vertices), std::move(triangles), facets);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed mesh JSON: ") + e.what());
  }
}

void write_mesh_json(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << mesh_to_json(mesh).dump() << '\n';
}

TriangleMesh read_mesh_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open mesh file " + path.string());
  try {
    return mesh_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

TriangleMesh read_gmsh_v2(std::istream& in, int hole_physical_tag) {
  std::unordered_map<long, int> node_index;
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryFacet> facets;
  bool saw_nodes = false, saw_elements = false;

  auto node = [&](long id) {
    auto it = node_index.find(id);
    if (it == node_index.end()) throw FormatError("gmsh element references unknown node " + std::to_string(id));
    return it->second;
  };

  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("$Nodes", 0) == 0) {
      long n = 0;
      in >> n;
      for (long i = 0; i < n; ++i) {
        long id;
        double x, y, z;
        if (!(in >> id >> x >> y >> z)) throw FormatError("truncated $Nodes section");
        node_index[id] = static_cast<int>(vertices.size());
        vertices.emplace_back(x, y);
      }
      saw_nodes = true;
    } else if (line.rfind("$Elements", 0) == 0) {
      long n = 0;
      in >> n;
      std::getline(in, line);
      for (long i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw FormatError("truncated $Elements section");
        std::istringstream row(line);
        long id, type, ntags;
        row >> id >> type >> ntags;
        std::vector<long> tags(static_cast<std::size_t>(std::max(0L, ntags)));
        for (auto& t : tags) row >> t;
        if (type == 1) {
          long a, b;
          row >> a >> b;
          const bool hole = !tags.empty() && tags[0] == hole_physical_tag;
          facets.push_back({{node(a), node(b)}, hole ? BoundaryTag::hole : BoundaryTag::outer});
        } else if (type == 2) {
          long a, b, c;
          row >> a >> b >> c;
          std::array<int, 3> tri{node(a), node(b), node(c)};
          if (orient2d(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]) < 0.0) std::swap(tri[1], tri[2]);
          triangles.push_back(tri);
        } else if (type != 15) {
          throw FormatError("unsupported gmsh element type " + std::to_string(type));
        }
        if (!row) throw FormatError("malformed gmsh element line: " + line);
      }
      saw_elements = true;
    }
  }
  if (!saw_nodes || !saw_elements) throw FormatError("gmsh file lacks $Nodes or $Elements");
  return TriangleMesh(std::move(vertices), std::move(triangles), facets);
}

TriangleMesh read_gmsh_v2(const std::filesystem::path& path, int hole_physical_tag) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open mesh file " + path.string());
  return read_gmsh_v2(in, hole_physical_tag);
}

TriangleMesh read_mesh(const std::filesystem::path& path) {
  if (path.extension() == ".msh") return read_gmsh_v2(path);
  return read_mesh_json(path);
}

}  // namespace fpreg
