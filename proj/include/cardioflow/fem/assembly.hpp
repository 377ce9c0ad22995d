#pragma once

#include "cardioflow/fem/mesh.hpp"
#include "cardioflow/fem/sparse.hpp"

#include <functional>
#include <string>
#include <vector>

namespace cardioflow::fem {

/// Vertex coordinates of a cell.
std::array<Point, 4> cell_points(const Mesh& mesh, std::size_t c);

/// Weak form of -div(s grad d) for one scalar component, P1 on the mesh.
/// s is a positive nodal field; it is integrated exactly.
SparseOperator assemble_weighted_stiffness(const Mesh& mesh, const Field& s);

/// Consistent P1 mass matrix (scalar).
SparseOperator assemble_mass(const Mesh& mesh);

/// Row sums of the mass matrix: the volume attributed to each vertex.
std::vector<double> lumped_vertex_volumes(const Mesh& mesh);

/// Cell-wise assembly driver: per-chunk triplet lists merged in chunk order,
/// so the result is independent of the thread count.
SparseOperator assemble_cells(const Mesh& mesh, Eigen::Index size,
                              const std::function<void(std::size_t cell, std::vector<Triplet>& out)>& kernel,
                              bool symmetric);

/// Q = sum over facets of the tag of the integral of (u - u_ale).n, with the
/// outward normal (inflow negative). m^3/s in 3D, m^2/s in 2D.
double boundary_integral_flux(const Mesh& mesh, const Field& u, const Field& u_ale, const std::string& tag);

/// Area-weighted mean of a scalar field over the facets of a tag.
double boundary_mean_pressure(const Mesh& mesh, const Field& p, const std::string& tag);

/// Total length/area of the facets of a tag.
double boundary_measure(const Mesh& mesh, const std::string& tag);

/// Piecewise-constant velocity gradient per cell; entry (i, j) = d u_i / d x_j.
std::vector<Eigen::Matrix3d> cell_velocity_gradients(const Mesh& mesh, const Field& u);

} // namespace cardioflow::fem
