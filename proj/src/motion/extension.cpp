#include "cardioflow/motion/extension.hpp"

#include "cardioflow/common/error.hpp"
#include "cardioflow/common/parallel.hpp"
#include "cardioflow/fem/assembly.hpp"
#include "cardioflow/fem/geometry.hpp"

#include <cmath>
#include <limits>
#include <set>

namespace cardioflow::motion {

using fem::Field;
using fem::Mesh;
using fem::Point;

namespace {

double distance_to_boundary(const Mesh& mesh, const Point& x) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [tag, facets] : mesh.boundary()) {
    for (const auto& f : facets) {
      const Point& a = mesh.vertex(f.vertices[0]);
      const Point& b = mesh.vertex(f.vertices[1]);
      const Point c = mesh.dim() == 2 ? fem::closest_point_on_segment(x, a, b)
                                      : fem::closest_point_on_triangle(x, a, b, mesh.vertex(f.vertices[2]));
      best = std::min(best, (x - c).norm());
    }
  }
  return best;
}

} // namespace

Field stiffening_field(const Mesh& mesh, const StiffeningOptions& options) {
  if (!(options.alpha >= 0) || !(options.floor > 0))
    throw InvalidArgument("stiffening: need alpha >= 0 and floor > 0");
  const std::size_t n = mesh.num_vertices();
  Field s(n, 1);
  for_each_chunk(n, 256, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) {
      const double h = mesh.vertex_min_edge(v);
      if (!(h > 0))
        throw InvalidArgument("stiffening: degenerate mesh (zero-length edge)");
      const double d = std::max(distance_to_boundary(mesh, mesh.vertex(v)), h);
      s.values[v] = std::max(options.floor, std::pow(1.0 / d, options.alpha));
    }
  });
  return s;
}

Field harmonic_extension(const Mesh& mesh, const Field& s, const Field& boundary_values,
                         const std::vector<std::string>& moving_tags, const fem::SolveOptions& options) {
  const int dim = mesh.dim();
  if (boundary_values.num_nodes() != mesh.num_vertices() || boundary_values.components != dim)
    throw InvalidArgument("harmonic_extension: boundary values must be a vector field on the mesh");
  std::set<int> moving;
  for (const auto& tag : moving_tags)
    for (int v : mesh.tag_vertices(tag))
      moving.insert(v);

  const fem::SparseOperator K = fem::assemble_weighted_stiffness(mesh, s);
  const std::vector<int> dofs = mesh.boundary_vertices();
  Field d(mesh.num_vertices(), dim);
  for (int c = 0; c < dim; ++c) {
    std::vector<double> values;
    values.reserve(dofs.size());
    for (int v : dofs)
      values.push_back(moving.count(v) ? boundary_values(v, c) : 0.0);
    if (values.empty())
      continue;
    // Constants lie in the kernel of K: solve for the data minus an offset
    // so that uniform data is reproduced without round-off.
    const double offset = values.front();
    std::vector<double> shifted(values.size());
    bool any = false;
    for (std::size_t k = 0; k < values.size(); ++k) {
      shifted[k] = values[k] - offset;
      any = any || shifted[k] != 0.0;
    }
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
      d(v, c) = offset;
    if (any) {
      fem::SparseOperator op = K;
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(mesh.num_vertices());
      fem::apply_dirichlet(op, rhs, dofs, shifted);
      const Eigen::VectorXd x = fem::solve_linear(op, rhs, options);
      for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
        d(v, c) = x[v] + offset;
    }
    for (std::size_t k = 0; k < dofs.size(); ++k)
      d(dofs[k], c) = values[k];
  }
  return d;
}

} // namespace cardioflow::motion
