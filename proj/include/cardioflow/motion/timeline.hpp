#pragma once

#include "cardioflow/fem/field.hpp"
#include "cardioflow/fem/mesh.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace cardioflow::motion {

/// Displacement snapshots at increasing times. For periodic sets the
/// frames cover [times.front(), times.front() + period).
struct DisplacementFrameSet {
  std::vector<double> times;
  std::vector<fem::Field> frames;
  bool periodic = false;
  double period = 0.0;

  void validate() const;
};

/// Cubic smoothing spline in time, fitted independently for every node and
/// component (natural end conditions). lambda weights the curvature penalty
/// against the squared knot misfit; lambda = 0 interpolates.
class DisplacementTimeline {
public:
  static DisplacementTimeline fit(const DisplacementFrameSet& frames, double lambda);

  /// Throws InvalidArgument outside [t_begin, t_end] for non-periodic
  /// timelines; periodic ones wrap t into the first period.
  fem::Field evaluate(double t) const;

  double t_begin() const { return t_begin_; }
  double t_end() const { return t_end_; }
  bool periodic() const { return periodic_; }
  double period() const { return period_; }
  double lambda() const { return lambda_; }
  int components() const { return components_; }
  std::size_t num_nodes() const { return num_nodes_; }

  /// Knot times of the fitted spline (including periodic padding).
  const std::vector<double>& knots() const { return knots_; }
  /// Fitted value at knot i.
  fem::Field knot_value(std::size_t i) const;
  /// Sum over knots and entries of (frame - fitted)^2, unpadded knots only.
  double knot_residual() const { return residual_; }

private:
  std::vector<double> knots_;
  Eigen::MatrixXd values_; // knots x entries
  Eigen::MatrixXd second_; // knots x entries, zero rows at both ends
  double t_begin_ = 0, t_end_ = 0, period_ = 0, lambda_ = 0, residual_ = 0;
  bool periodic_ = false;
  int components_ = 1;
  std::size_t num_nodes_ = 0;
};

/// u_ALE = (d(t_next) - d(t_next - dt)) / dt.
fem::Field ale_velocity(const DisplacementTimeline& timeline, double t_next, double dt);

/// Extends every frame of boundary displacements into the volume. Since the
/// extension is linear, splines of extended frames equal extensions of the
/// spline.
DisplacementFrameSet extend_frames(const fem::Mesh& mesh, const fem::Field& s, const DisplacementFrameSet& boundary,
                                   const std::vector<std::string>& moving_tags);

/// One VTK file per frame (point array "displacement") next to a TOML
/// manifest with `times`, `files`, `periodic` and `period`.
void write_frames(const std::filesystem::path& manifest, const fem::Mesh& mesh, const DisplacementFrameSet& frames);
/// Frames are truncated to the mesh dimension and checked against its vertex count.
DisplacementFrameSet read_frames(const std::filesystem::path& manifest, const fem::Mesh& mesh);

} // namespace cardioflow::motion
