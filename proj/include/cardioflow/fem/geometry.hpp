#pragma once

#include "cardioflow/fem/field.hpp"

namespace cardioflow::fem {

/// Closest point to p on the segment [a, b].
Point closest_point_on_segment(const Point& p, const Point& a, const Point& b);

/// Closest point to p on the triangle (a, b, c), including edges and corners.
Point closest_point_on_triangle(const Point& p, const Point& a, const Point& b, const Point& c);

} // namespace cardioflow::fem
