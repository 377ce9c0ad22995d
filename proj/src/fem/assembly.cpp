#include "cardioflow/fem/assembly.hpp"

#include "cardioflow/common/error.hpp"
#include "cardioflow/common/parallel.hpp"

#include <cmath>

namespace cardioflow::fem {

namespace {
constexpr std::size_t assembly_chunk = 2048;
}

std::array<Point, 4> cell_points(const Mesh& mesh, std::size_t c) {
  std::array<Point, 4> pts{};
  auto cl = mesh.cell(c);
  for (std::size_t i = 0; i < cl.size(); ++i)
    pts[i] = mesh.vertex(cl[i]);
  return pts;
}

SparseOperator assemble_cells(const Mesh& mesh, Eigen::Index size,
                              const std::function<void(std::size_t, std::vector<Triplet>&)>& kernel,
                              bool symmetric) {
  const std::size_t n = mesh.num_cells();
  std::vector<std::vector<Triplet>> parts(chunk_count(n, assembly_chunk));
  for_each_chunk(n, assembly_chunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    auto& out = parts[chunk];
    for (std::size_t c = begin; c < end; ++c)
      kernel(c, out);
  });
  std::vector<Triplet> all;
  std::size_t total = 0;
  for (const auto& p : parts)
    total += p.size();
  all.reserve(total);
  for (const auto& p : parts)
    all.insert(all.end(), p.begin(), p.end());

  SparseOperator op;
  op.matrix.resize(size, size);
  op.matrix.setFromTriplets(all.begin(), all.end());
  op.matrix.makeCompressed();
  op.symmetric = symmetric;
  return op;
}

SparseOperator assemble_weighted_stiffness(const Mesh& mesh, const Field& s) {
  if (s.components != 1 || s.num_nodes() != mesh.num_vertices())
    throw InvalidArgument("stiffness weight must be a scalar field on the mesh");
  for (double v : s.values)
    if (!(v > 0.0) || !std::isfinite(v))
      throw InvalidArgument("stiffness weight must be strictly positive and finite");

  const int dim = mesh.dim();
  return assemble_cells(
      mesh, static_cast<Eigen::Index>(mesh.num_vertices()),
      [&](std::size_t c, std::vector<Triplet>& out) {
        const auto pts = cell_points(mesh, c);
        const auto grads = barycentric_gradients(dim, std::span<const Point>(pts.data(), dim + 1));
        auto cl = mesh.cell(c);
        // s is linear and the gradients constant: the integral is |K| * mean(s).
        double s_mean = 0.0;
        for (int v : cl)
          s_mean += s.values[v];
        s_mean /= cl.size();
        const double w = mesh.cell_volume(c) * s_mean;
        for (std::size_t i = 0; i < cl.size(); ++i)
          for (std::size_t j = 0; j < cl.size(); ++j)
            out.emplace_back(cl[i], cl[j], w * grads[i].dot(grads[j]));
      },
      true);
}

SparseOperator assemble_mass(const Mesh& mesh) {
  const int dim = mesh.dim();
  return assemble_cells(
      mesh, static_cast<Eigen::Index>(mesh.num_vertices()),
      [&](std::size_t c, std::vector<Triplet>& out) {
        auto cl = mesh.cell(c);
        const double vol = mesh.cell_volume(c);
        // Exact P1 mass: |K| (1 + delta_ij) / ((d + 1)(d + 2)).
        const double off = vol / ((dim + 1) * (dim + 2));
        for (std::size_t i = 0; i < cl.size(); ++i)
          for (std::size_t j = 0; j < cl.size(); ++j)
            out.emplace_back(cl[i], cl[j], i == j ? 2 * off : off);
      },
      true);
}

std::vector<double> lumped_vertex_volumes(const Mesh& mesh) {
  std::vector<double> out(mesh.num_vertices(), 0.0);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    auto cl = mesh.cell(c);
    const double share = mesh.cell_volume(c) / cl.size();
    for (int v : cl)
      out[v] += share;
  }
  return out;
}

double boundary_integral_flux(const Mesh& mesh, const Field& u, const Field& u_ale, const std::string& tag) {
  if (u.num_nodes() != mesh.num_vertices() || u_ale.num_nodes() != mesh.num_vertices())
    throw InvalidArgument("boundary_integral_flux: field size does not match mesh");
  if (u.components != mesh.dim() || u_ale.components != mesh.dim())
    throw InvalidArgument("boundary_integral_flux: velocity fields must be vector fields");
  const int dim = mesh.dim();
  double q = 0.0;
  for (const auto& f : mesh.facets(tag)) {
    // Relative velocity is linear on the facet: its integral is measure * mean.
    Point mean = Point::Zero();
    for (int i = 0; i < dim; ++i)
      mean += u.vec(f.vertices[i]) - u_ale.vec(f.vertices[i]);
    q += f.measure * mean.dot(f.normal) / dim;
  }
  return q;
}

double boundary_mean_pressure(const Mesh& mesh, const Field& p, const std::string& tag) {
  if (p.components != 1 || p.num_nodes() != mesh.num_vertices())
    throw InvalidArgument("boundary_mean_pressure: expected a scalar field on the mesh");
  const int dim = mesh.dim();
  double integral = 0.0, area = 0.0;
  for (const auto& f : mesh.facets(tag)) {
    double mean = 0.0;
    for (int i = 0; i < dim; ++i)
      mean += p.values[f.vertices[i]];
    integral += f.measure * mean / dim;
    area += f.measure;
  }
  if (area <= 0.0)
    throw InvalidArgument("boundary tag '" + tag + "' has no facets");
  return integral / area;
}

double boundary_measure(const Mesh& mesh, const std::string& tag) {
  double area = 0.0;
  for (const auto& f : mesh.facets(tag))
    area += f.measure;
  return area;
}

std::vector<Eigen::Matrix3d> cell_velocity_gradients(const Mesh& mesh, const Field& u) {
  if (u.num_nodes() != mesh.num_vertices() || u.components != mesh.dim())
    throw InvalidArgument("cell_velocity_gradients: expected a vector field on the mesh");
  const int dim = mesh.dim();
  std::vector<Eigen::Matrix3d> out(mesh.num_cells());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto pts = cell_points(mesh, c);
    const auto grads = barycentric_gradients(dim, std::span<const Point>(pts.data(), dim + 1));
    auto cl = mesh.cell(c);
    Eigen::Matrix3d g = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < cl.size(); ++i)
      g += u.vec(cl[i]) * grads[i].transpose();
    out[c] = g;
  }
  return out;
}

} // namespace cardioflow::fem
