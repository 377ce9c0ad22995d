#include "cardioflow/motion/generators.hpp"

#include "cardioflow/common/error.hpp"

#include <cmath>
#include <numbers>

namespace cardioflow::motion {

using fem::Field;
using fem::FacetVertices;
using fem::Mesh;
using fem::Point;

Mesh ventricle_mesh(double a, double b, int n) {
  if (!(a > 0) || !(b > 0) || n < 1)
    throw InvalidArgument("ventricle_mesh: need a, b > 0 and n >= 1");
  const int nu = 2 * n, nv = n;
  auto id = [nu](int i, int j) { return j * (nu + 1) + i; };
  std::vector<Point> pts;
  for (int j = 0; j <= nv; ++j) {
    for (int i = 0; i <= nu; ++i) {
      const double u = -1.0 + 2.0 * i / nu, v = -1.0 + double(j) / nv;
      pts.emplace_back(a * u * std::sqrt(1.0 - 0.5 * v * v), b * v * std::sqrt(1.0 - 0.5 * u * u), 0.0);
    }
  }
  std::vector<int> cells;
  for (int j = 0; j < nv; ++j) {
    for (int i = 0; i < nu; ++i) {
      const int v00 = id(i, j), v10 = id(i + 1, j), v11 = id(i + 1, j + 1), v01 = id(i, j + 1);
      // Diagonals run through the bottom corners so no cell gets three
      // vertices on the curved boundary.
      if (i < n)
        cells.insert(cells.end(), {v00, v10, v11, v00, v11, v01});
      else
        cells.insert(cells.end(), {v00, v10, v01, v10, v11, v01});
    }
  }
  std::map<std::string, std::vector<FacetVertices>> tags;
  for (int i = 0; i < nu; ++i) {
    tags["out"].push_back({id(i, nv), id(i + 1, nv), -1});
    tags["wall"].push_back({id(i, 0), id(i + 1, 0), -1});
  }
  for (int j = 0; j < nv; ++j) {
    tags["wall"].push_back({id(0, j), id(0, j + 1), -1});
    tags["wall"].push_back({id(nu, j), id(nu, j + 1), -1});
  }
  return Mesh::create(2, std::move(pts), std::move(cells), tags);
}

VentricleGenerator::VentricleGenerator(std::function<double(double)> area_ratio, double period)
    : ratio_(std::move(area_ratio)), period_(period) {
  if (!ratio_ || !(period > 0))
    throw InvalidArgument("VentricleGenerator: need an area ratio and a positive period");
}

double VentricleGenerator::kappa(double t) const {
  const double r = ratio_(t);
  if (!(r > 0) || !std::isfinite(r))
    throw InvalidArgument("VentricleGenerator: area ratio must be positive");
  return std::sqrt(r);
}

Field VentricleGenerator::displacement(const Mesh& reference, double t) const {
  const double k = kappa(t) - 1.0;
  Field d(reference.num_vertices(), reference.dim());
  for (std::size_t v = 0; v < reference.num_vertices(); ++v)
    d.set_vec(v, k * reference.vertex(v));
  return d;
}

ChannelWallGenerator::ChannelWallGenerator(double amplitude, double length, double period, std::string tag)
    : amplitude_(amplitude), length_(length), period_(period), tag_(std::move(tag)) {
  if (!(length > 0) || !(period > 0) || !std::isfinite(amplitude))
    throw InvalidArgument("ChannelWallGenerator: need length, period > 0");
}

Field ChannelWallGenerator::displacement(const Mesh& reference, double t) const {
  Field d(reference.num_vertices(), reference.dim());
  const double s = std::sin(2.0 * std::numbers::pi * t / period_);
  for (std::size_t v = 0; v < reference.num_vertices(); ++v)
    d(v, 1) = amplitude_ * std::sin(std::numbers::pi * reference.vertex(v).x() / length_) * s;
  return d;
}

DisplacementFrameSet sample_frames(const MotionGenerator& generator, const Mesh& reference, int count) {
  if (count < 3)
    throw InvalidArgument("sample_frames: need at least three frames");
  DisplacementFrameSet out;
  out.periodic = true;
  out.period = generator.period();
  for (int k = 0; k < count; ++k) {
    const double t = out.period * k / count;
    out.times.push_back(t);
    out.frames.push_back(generator.displacement(reference, t));
  }
  return out;
}

} // namespace cardioflow::motion
