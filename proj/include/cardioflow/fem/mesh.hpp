#pragma once

#include "cardioflow/fem/field.hpp"

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cardioflow::fem {

/// Facet vertex list; the third entry is unused (-1) in 2D.
using FacetVertices = std::array<int, 3>;

struct BoundaryFacet {
  FacetVertices vertices{-1, -1, -1};
  int cell = -1;     ///< owning cell
  int opposite = -1; ///< cell vertex not on the facet
  Point normal = Point::Zero(); ///< unit outward normal
  double measure = 0.0;         ///< length (2D) or area (3D)
};

/// Simplicial mesh (triangles in 2D, tetrahedra in 3D) with tagged boundary
/// facets. Topology is shared between a mesh and its displaced copies.
class Mesh {
public:
  /// Builds a mesh, flipping negatively oriented cells. Every topological
  /// boundary facet must appear under exactly one tag.
  static Mesh create(int dim, std::vector<Point> vertices, std::vector<int> cells,
                     const std::map<std::string, std::vector<FacetVertices>>& tagged_facets);

  int dim() const { return topo_->dim; }
  int vertices_per_cell() const { return topo_->dim + 1; }
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_cells() const { return topo_->cells.size() / vertices_per_cell(); }

  const std::vector<Point>& vertices() const { return vertices_; }
  const Point& vertex(std::size_t i) const { return vertices_[i]; }
  std::span<const int> cell(std::size_t c) const {
    return {topo_->cells.data() + c * vertices_per_cell(), static_cast<std::size_t>(vertices_per_cell())};
  }
  double cell_volume(std::size_t c) const { return cell_volumes_[c]; }
  double total_volume() const;

  std::vector<std::string> tags() const;
  bool has_tag(const std::string& tag) const { return facets_.count(tag) > 0; }
  /// Throws InvalidArgument for unknown tags.
  const std::vector<BoundaryFacet>& facets(const std::string& tag) const;
  const std::map<std::string, std::vector<BoundaryFacet>>& boundary() const { return facets_; }

  /// Sorted unique vertices touching facets of the tag.
  std::vector<int> tag_vertices(const std::string& tag) const;
  std::vector<int> boundary_vertices() const;
  /// Cells incident to each vertex.
  const std::vector<std::vector<int>>& vertex_cells() const { return topo_->vertex_cells; }

  /// Mesh with the same topology at positions vertices + d.
  /// Throws SolverError if a cell collapses or inverts.
  Mesh displaced(const Field& d) const;

  /// Re-tags every boundary facet. The callback receives the facet centroid,
  /// its outward normal and the current tag, and returns the new tag.
  Mesh retagged(const std::function<std::string(const Point&, const Point&, const std::string&)>& rule) const;

  /// Smallest edge length of each cell.
  double cell_min_edge(std::size_t c) const;
  /// Smallest edge length among the cells incident to a vertex.
  double vertex_min_edge(std::size_t v) const;

private:
  struct Topology {
    int dim = 2;
    std::vector<int> cells;
    std::map<std::string, std::vector<BoundaryFacet>> facets; // geometry fields unused here
    std::vector<std::vector<int>> vertex_cells;
  };

  Mesh() = default;
  void compute_geometry();

  std::shared_ptr<const Topology> topo_;
  std::vector<Point> vertices_;
  std::vector<double> cell_volumes_;
  std::map<std::string, std::vector<BoundaryFacet>> facets_;
};

/// Structured simplicial mesh of [0, extents] with `resolution` cells per
/// axis (2 triangles or 6 Kuhn tetrahedra per box). Facets are tagged
/// "x0","x1","y0","y1"(,"z0","z1") by the box face they lie on.
Mesh generate_box_mesh(int dim, const std::vector<double>& extents, const std::vector<int>& resolution);

/// Signed volume of a simplex given its vertices (dim + 1 points).
double simplex_signed_volume(int dim, std::span<const Point> pts);

/// Gradients of the barycentric coordinates of a simplex.
std::array<Point, 4> barycentric_gradients(int dim, std::span<const Point> pts);

} // namespace cardioflow::fem
