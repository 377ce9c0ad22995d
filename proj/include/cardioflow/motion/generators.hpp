#pragma once

#include "cardioflow/fem/field.hpp"
#include "cardioflow/fem/mesh.hpp"
#include "cardioflow/motion/timeline.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace cardioflow::motion {

/// Analytic boundary motion on a reference mesh.
class MotionGenerator {
public:
  virtual ~MotionGenerator() = default;
  /// Displacement at every vertex of the reference mesh (only boundary
  /// values on moving tags are used by the extension).
  virtual fem::Field displacement(const fem::Mesh& reference, double t) const = 0;
  virtual std::vector<std::string> moving_tags() const = 0;
  virtual double period() const = 0;
};

/// Half ellipse x^2/a^2 + y^2/b^2 <= 1, y <= 0 (2D). The base y = 0 is
/// tagged "out", the curved boundary "wall". `n` cells across the half
/// width; the structured grid is mapped from a rectangle.
fem::Mesh ventricle_mesh(double a, double b, int n);

/// Uniform scaling about the base centre, x -> kappa(t) x with
/// kappa = sqrt(area_ratio(t)); the enclosed area is area_ratio(t) times the
/// reference area exactly.
class VentricleGenerator : public MotionGenerator {
public:
  VentricleGenerator(std::function<double(double)> area_ratio, double period);
  fem::Field displacement(const fem::Mesh& reference, double t) const override;
  std::vector<std::string> moving_tags() const override { return {"out", "wall"}; }
  double period() const override { return period_; }
  double kappa(double t) const;

private:
  std::function<double(double)> ratio_;
  double period_;
};

/// Top wall of a channel [0, L] x [0, H]: d_y = A sin(pi x / L) sin(2 pi t / T).
class ChannelWallGenerator : public MotionGenerator {
public:
  ChannelWallGenerator(double amplitude, double length, double period, std::string tag = "y1");
  fem::Field displacement(const fem::Mesh& reference, double t) const override;
  std::vector<std::string> moving_tags() const override { return {tag_}; }
  double period() const override { return period_; }

private:
  double amplitude_, length_, period_;
  std::string tag_;
};

/// Samples `count` equally spaced frames over one period (periodic set).
DisplacementFrameSet sample_frames(const MotionGenerator& generator, const fem::Mesh& reference, int count);

} // namespace cardioflow::motion
