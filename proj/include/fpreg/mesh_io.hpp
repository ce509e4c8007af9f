#pragma once

#include "fpreg/mesh.hpp"

#include <json.hpp>

#include <filesystem>
#include <istream>

namespace fpreg {

/// `{"version":1,"vertices":[[x,y],...],"triangles":[[i,j,k],...],
///   "boundary":[{"edge":[i,j],"tag":"outer"|"hole"},...]}`
nlohmann::json mesh_to_json(const TriangleMesh& mesh);
TriangleMesh mesh_from_json(const nlohmann::json& doc);

void write_mesh_json(const TriangleMesh& mesh, const std::filesystem::path& path);
TriangleMesh read_mesh_json(const std::filesystem::path& path);

/// Minimal ASCII Gmsh v2 reader: `$Nodes` plus `$Elements` of type 1 (line)
/// and 2 (triangle). Line elements whose physical tag equals `hole_physical_tag`
/// are tagged hole; every other boundary edge is outer. Clockwise triangles
/// are reoriented.
TriangleMesh read_gmsh_v2(std::istream& in, int hole_physical_tag = 2);
TriangleMesh read_gmsh_v2(const std::filesystem::path& path, int hole_physical_tag = 2);

/// Dispatches on extension: `.msh` is Gmsh, anything else mesh JSON.
TriangleMesh read_mesh(const std::filesystem::path& path);

}  // namespace fpreg
