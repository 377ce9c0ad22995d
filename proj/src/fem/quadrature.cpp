#include "cardioflow/fem/quadrature.hpp"

#include "cardioflow/common/error.hpp"

#include <cmath>

namespace cardioflow::fem {

namespace {

using Bary = std::array<double, 4>;

QuadratureRule make_triangle_rule() {
  // Edge midpoints.
  QuadratureRule r;
  r.points = {{0.5, 0.5, 0.0, 0.0}, {0.0, 0.5, 0.5, 0.0}, {0.5, 0.0, 0.5, 0.0}};
  r.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  return r;
}

QuadratureRule make_tet_rule() {
  const double a = 0.5854101966249685, b = 0.1381966011250105;
  QuadratureRule r;
  r.points = {{a, b, b, b}, {b, a, b, b}, {b, b, a, b}, {b, b, b, a}};
  r.weights = {0.25, 0.25, 0.25, 0.25};
  return r;
}

Bary mid(const Bary& p, const Bary& q) {
  Bary m;
  for (int i = 0; i < 4; ++i)
    m[i] = 0.5 * (p[i] + q[i]);
  return m;
}

// Uniform red refinement; all children have equal measure.
std::vector<std::vector<Bary>> subdivide(int dim, const std::vector<Bary>& s) {
  if (dim == 2) {
    const Bary m01 = mid(s[0], s[1]), m12 = mid(s[1], s[2]), m02 = mid(s[0], s[2]);
    return {{s[0], m01, m02}, {m01, s[1], m12}, {m02, m12, s[2]}, {m01, m12, m02}};
  }
  const Bary m01 = mid(s[0], s[1]), m02 = mid(s[0], s[2]), m03 = mid(s[0], s[3]);
  const Bary m12 = mid(s[1], s[2]), m13 = mid(s[1], s[3]), m23 = mid(s[2], s[3]);
  return {{s[0], m01, m02, m03}, {m01, s[1], m12, m13}, {m02, m12, s[2], m23}, {m03, m13, m23, s[3]},
          {m02, m13, m01, m12},  {m02, m13, m12, m23}, {m02, m13, m23, m03}, {m02, m13, m03, m01}};
}

void collect(int dim, const std::vector<Bary>& simplex, int levels, double weight, QuadratureRule& out) {
  if (levels == 0) {
    const auto& base = cell_rule(dim);
    for (std::size_t q = 0; q < base.size(); ++q) {
      Bary p{0, 0, 0, 0};
      for (int v = 0; v <= dim; ++v)
        for (int i = 0; i < 4; ++i)
          p[i] += base.points[q][v] * simplex[v][i];
      out.points.push_back(p);
      out.weights.push_back(weight * base.weights[q]);
    }
    return;
  }
  const auto children = subdivide(dim, simplex);
  for (const auto& child : children)
    collect(dim, child, levels - 1, weight / children.size(), out);
}

} // namespace

const QuadratureRule& cell_rule(int dim) {
  static const QuadratureRule tri = make_triangle_rule();
  static const QuadratureRule tet = make_tet_rule();
  if (dim == 2)
    return tri;
  if (dim == 3)
    return tet;
  throw InvalidArgument("quadrature dimension must be 2 or 3");
}

QuadratureRule refined_cell_rule(int dim, int levels) {
  if (levels < 0)
    throw InvalidArgument("refinement levels must be non-negative");
  std::vector<Bary> ref;
  for (int v = 0; v <= dim; ++v) {
    Bary b{0, 0, 0, 0};
    b[v] = 1.0;
    ref.push_back(b);
  }
  QuadratureRule out;
  collect(dim, ref, levels, 1.0, out);
  return out;
}

const QuadratureRule& facet_rule(int dim) {
  static const QuadratureRule segment = [] {
    const double g = 0.5 / std::sqrt(3.0);
    QuadratureRule r;
    r.points = {{0.5 + g, 0.5 - g, 0, 0}, {0.5 - g, 0.5 + g, 0, 0}};
    r.weights = {0.5, 0.5};
    return r;
  }();
  if (dim == 2)
    return segment;
  if (dim == 3)
    return cell_rule(2);
  throw InvalidArgument("quadrature dimension must be 2 or 3");
}

} // namespace cardioflow::fem
