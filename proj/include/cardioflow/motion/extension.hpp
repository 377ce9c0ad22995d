#pragma once

#include "cardioflow/fem/field.hpp"
#include "cardioflow/fem/mesh.hpp"
#include "cardioflow/fem/sparse.hpp"

#include <string>
#include <vector>

namespace cardioflow::motion {

struct StiffeningOptions {
  double alpha = 1.0;
  double floor = 1.0;
};

/// s(x) = max(floor, (1 / dist(x, boundary))^alpha), with the distance
/// clamped below by the shortest edge at the vertex.
fem::Field stiffening_field(const fem::Mesh& mesh, const StiffeningOptions& options = {});

/// Solves -div(s grad d) = 0 per component. Boundary vertices on
/// `moving_tags` take their value from `boundary_values`; every other
/// boundary vertex is held at zero. Interior entries of `boundary_values`
/// are ignored.
fem::Field harmonic_extension(const fem::Mesh& mesh, const fem::Field& s, const fem::Field& boundary_values,
                              const std::vector<std::string>& moving_tags,
                              const fem::SolveOptions& options = {fem::SolverMethod::cg, 1e-12, 20000});

} // namespace cardioflow::motion
