#pragma once

#include "cardioflow/fem/mesh.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace cardioflow::fem {

using NamedField = std::pair<std::string, const Field*>;

struct VtkWriteOptions {
  /// Append boundary facets as extra cells with a "boundary_tag" cell array;
  /// the tag names go into the title line so the mesh can be rebuilt.
  bool include_boundary = false;
  std::string title = "cardioflow";
};

/// Legacy ASCII unstructured grid (POINTS / CELLS / CELL_TYPES / POINT_DATA).
/// 1-component fields are written as SCALARS, others as VECTORS (padded to 3).
void write_vtk(const std::filesystem::path& path, const Mesh& mesh, const std::vector<NamedField>& fields,
               const VtkWriteOptions& options = {});

struct VtkData {
  std::string title;
  std::vector<Point> points;
  std::vector<int> cell_types;
  std::vector<std::vector<int>> cells;
  std::map<std::string, Field> point_data;
  std::map<std::string, std::vector<double>> cell_data;
};

/// Reads files in the layout produced by write_vtk.
VtkData read_vtk(const std::filesystem::path& path);

/// Rebuilds a tagged mesh from a file written with include_boundary = true.
Mesh mesh_from_vtk(const VtkData& data);

} // namespace cardioflow::fem
