#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <vector>

namespace cardioflow::fem {

using Point = Eigen::Vector3d;

/// Nodal degrees of freedom bound to the vertices of a mesh.
/// Values are stored node-major: values[node * components + comp].
struct Field {
  int components = 1;
  std::vector<double> values;

  Field() = default;
  Field(std::size_t num_nodes, int comps, double fill = 0.0)
      : components(comps), values(num_nodes * static_cast<std::size_t>(comps), fill) {}

  std::size_t num_nodes() const { return components > 0 ? values.size() / components : 0; }

  double& operator()(std::size_t node, int comp) { return values[node * components + comp]; }
  double operator()(std::size_t node, int comp) const { return values[node * components + comp]; }

  /// Vector value at a node, zero-padded to three components.
  Point vec(std::size_t node) const {
    Point p = Point::Zero();
    for (int c = 0; c < components && c < 3; ++c)
      p[c] = (*this)(node, c);
    return p;
  }

  void set_vec(std::size_t node, const Point& v) {
    for (int c = 0; c < components && c < 3; ++c)
      (*this)(node, c) = v[c];
  }

  bool is_finite() const {
    for (double x : values)
      if (!std::isfinite(x))
        return false;
    return true;
  }

  Eigen::Map<Eigen::VectorXd> as_vector() { return {values.data(), static_cast<Eigen::Index>(values.size())}; }
  Eigen::Map<const Eigen::VectorXd> as_vector() const {
    return {values.data(), static_cast<Eigen::Index>(values.size())};
  }
};

} // namespace cardioflow::fem
