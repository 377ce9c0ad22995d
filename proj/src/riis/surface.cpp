#include "cardioflow/riis/surface.hpp"

#include "cardioflow/common/error.hpp"
#include "cardioflow/fem/geometry.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

namespace cardioflow::riis {

Point Surface::normal(std::size_t e) const {
  const auto& el = elements[e];
  const Point& a = vertices[el[0]];
  const Point& b = vertices[el[1]];
  if (dim == 2) {
    const Point t = (b - a).normalized();
    return Point(t.y(), -t.x(), 0.0);
  }
  return (b - a).cross(vertices[el[2]] - a).normalized();
}

double Surface::measure() const {
  double m = 0;
  for (const auto& el : elements) {
    const Point& a = vertices[el[0]];
    const Point& b = vertices[el[1]];
    m += dim == 2 ? (b - a).norm() : 0.5 * (b - a).cross(vertices[el[2]] - a).norm();
  }
  return m;
}

void Surface::validate() const {
  if (dim != 2 && dim != 3)
    throw InvalidArgument("surface: dimension must be 2 or 3");
  if (elements.empty())
    throw InvalidArgument("surface: empty surface");
  for (std::size_t e = 0; e < elements.size(); ++e) {
    for (int k = 0; k < dim; ++k)
      if (elements[e][k] < 0 || static_cast<std::size_t>(elements[e][k]) >= vertices.size())
        throw InvalidArgument("surface: element index out of range");
    const Point& a = vertices[elements[e][0]];
    const Point& b = vertices[elements[e][1]];
    const double size = dim == 2 ? (b - a).norm() : (b - a).cross(vertices[elements[e][2]] - a).norm();
    if (!(size > 0) || !std::isfinite(size))
      throw InvalidArgument(fmt::format("surface: degenerate element {}", e));
  }
}

Surface polyline(const std::vector<Point>& points) {
  Surface s;
  s.dim = 2;
  s.vertices = points;
  for (std::size_t i = 0; i + 1 < points.size(); ++i)
    s.elements.push_back({int(i), int(i + 1), -1});
  s.validate();
  return s;
}

Surface quad_patch(const Point& a, const Point& b, const Point& c, const Point& d) {
  Surface s;
  s.dim = 3;
  s.vertices = {a, b, c, d};
  s.elements = {{0, 1, 2}, {0, 2, 3}};
  s.validate();
  return s;
}

double signed_distance(const Surface& surface, const Point& x) {
  if (surface.elements.empty())
    throw InvalidArgument("signed_distance: empty surface");
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_e = 0;
  Point best_c;
  for (std::size_t e = 0; e < surface.elements.size(); ++e) {
    const auto& el = surface.elements[e];
    const Point& a = surface.vertices[el[0]];
    const Point& b = surface.vertices[el[1]];
    const Point c = surface.dim == 2 ? fem::closest_point_on_segment(x, a, b)
                                     : fem::closest_point_on_triangle(x, a, b, surface.vertices[el[2]]);
    const double d = (x - c).norm();
    if (d < best) {
      best = d;
      best_e = e;
      best_c = c;
    }
  }
  if (best == 0.0)
    return 0.0;
  return (x - best_c).dot(surface.normal(best_e)) < 0 ? -best : best;
}

Surface read_stl(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f)
    throw ParseError(fmt::format("cannot open {}", path.string()));
  Surface s;
  s.dim = 3;
  std::map<std::tuple<double, double, double>, int> index;
  std::string word;
  std::array<int, 3> tri{};
  int k = 0;
  while (f >> word) {
    if (word != "vertex")
      continue;
    double x, y, z;
    if (!(f >> x >> y >> z))
      throw ParseError(fmt::format("{}: malformed vertex", path.string()));
    auto [it, inserted] = index.try_emplace({x, y, z}, int(s.vertices.size()));
    if (inserted)
      s.vertices.emplace_back(x, y, z);
    tri[k++] = it->second;
    if (k == 3) {
      s.elements.push_back(tri);
      k = 0;
    }
  }
  if (k != 0)
    throw ParseError(fmt::format("{}: incomplete facet", path.string()));
  s.validate();
  return s;
}

void write_stl(const std::filesystem::path& path, const Surface& surface) {
  if (surface.dim != 3)
    throw InvalidArgument("write_stl: 3D surfaces only");
  std::ofstream f(path);
  if (!f)
    throw Error(fmt::format("cannot write {}", path.string()));
  f << "solid surface\n";
  for (std::size_t e = 0; e < surface.size(); ++e) {
    const Point n = surface.normal(e);
    f << fmt::format("facet normal {:.17g} {:.17g} {:.17g}\n outer loop\n", n.x(), n.y(), n.z());
    for (int k = 0; k < 3; ++k) {
      const Point& v = surface.vertices[surface.elements[e][k]];
      f << fmt::format("  vertex {:.17g} {:.17g} {:.17g}\n", v.x(), v.y(), v.z());
    }
    f << " endloop\nendfacet\n";
  }
  f << "endsolid surface\n";
}

Surface read_polyline_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f)
    throw ParseError(fmt::format("cannot open {}", path.string()));
  Surface s;
  s.dim = 2;
  std::string line;
  int run = 0; // points in the current polyline
  while (std::getline(f, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      run = 0;
      continue;
    }
    for (char& ch : line)
      if (ch == ',')
        ch = ' ';
    std::istringstream in(line);
    double x, y;
    if (!(in >> x >> y)) {
      if (s.vertices.empty())
        continue; // header
      throw ParseError(fmt::format("{}: cannot parse '{}'", path.string(), line));
    }
    s.vertices.emplace_back(x, y, 0.0);
    if (run > 0)
      s.elements.push_back({int(s.vertices.size()) - 2, int(s.vertices.size()) - 1, -1});
    ++run;
  }
  s.validate();
  return s;
}

} // namespace cardioflow::riis
