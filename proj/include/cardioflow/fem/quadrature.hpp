#pragma once

#include <array>
#include <vector>

namespace cardioflow::fem {

/// Quadrature on a simplex in barycentric coordinates. Weights are fractions
/// of the simplex measure and sum to one.
struct QuadratureRule {
  std::vector<std::array<double, 4>> points;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

/// Exact for polynomials of degree 2 on a triangle (dim 2) or tetrahedron (dim 3).
const QuadratureRule& cell_rule(int dim);

/// Degree-2 rule applied on `levels` rounds of uniform subdivision (4 or 8
/// children per round); used for non-polynomial coefficients.
QuadratureRule refined_cell_rule(int dim, int levels);

/// Exact for degree 3 on a segment (dim 2 facets) and degree 2 on a triangle (dim 3 facets).
const QuadratureRule& facet_rule(int dim);

} // namespace cardioflow::fem
