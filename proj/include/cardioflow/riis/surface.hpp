#pragma once

#include "cardioflow/fem/field.hpp"

#include <array>
#include <filesystem>
#include <vector>

namespace cardioflow::riis {

using fem::Point;

/// Immersed surface: segments in 2D, triangles in 3D.
struct Surface {
  int dim = 2;
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> elements; // third index unused in 2D

  std::size_t size() const { return elements.size(); }
  /// Unit normal of element e: (t_y, -t_x) for a segment with tangent t,
  /// right-handed for triangles.
  Point normal(std::size_t e) const;
  double measure() const;
  /// Throws InvalidArgument for empty or degenerate surfaces.
  void validate() const;
};

/// Polyline through the points, consecutive points joined.
Surface polyline(const std::vector<Point>& points);

/// Two triangles spanning the planar quadrilateral a, b, c, d.
Surface quad_patch(const Point& a, const Point& b, const Point& c, const Point& d);

/// Signed distance: Euclidean distance to the closest element, signed by
/// the side of that element's plane (line) the point lies on.
double signed_distance(const Surface& surface, const Point& x);

/// ASCII STL; facets become triangles with vertices merged exactly.
Surface read_stl(const std::filesystem::path& path);
void write_stl(const std::filesystem::path& path, const Surface& surface);

/// CSV with "x,y" per line (optional header); blank lines start a new
/// polyline.
Surface read_polyline_csv(const std::filesystem::path& path);

} // namespace cardioflow::riis
