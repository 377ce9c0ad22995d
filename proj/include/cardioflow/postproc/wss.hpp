#pragma once

// Wall shear stress, its time average and probe averages on P1 fields.

#include "cardioflow/fem/field.hpp"
#include "cardioflow/fem/mesh.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace cardioflow::postproc {

/// Values attached to a sorted list of boundary vertices.
struct WallField {
  std::vector<int> vertices;
  fem::Field values; // one node per entry of `vertices`

  /// Scatter onto all mesh vertices (zero elsewhere).
  fem::Field to_mesh(std::size_t num_vertices) const;
};

/// Unit outward normal per vertex of the tags (measure-weighted facet normals).
WallField vertex_normals(const fem::Mesh& mesh, const std::vector<std::string>& tags);

/// Tangential traction τn - (τn·n)n with τ = 2μ ε(u), per wall vertex
/// (Pa, dim components). ∇u at a vertex is the volume-weighted mean of the
/// constant P1 gradients of its cells. Throws InvalidArgument for unknown tags.
WallField wss_field(const fem::Mesh& mesh, const fem::Field& u, double mu, const std::vector<std::string>& wall_tags);

/// (1/T) ∫ |WSS| dt by the trapezoidal rule over the sample times. All
/// samples must share the vertex list. A single sample gives its magnitude.
/// Throws InvalidArgument on an empty series.
WallField tawss(const std::vector<WallField>& series, const std::vector<double>& times);

struct RegionStats {
  double min = 0, mean = 0, max = 0;
  double area = 0;
};

/// Statistics of a scalar wall field over the vertices of one tag. The mean
/// is weighted by lumped vertex boundary measure.
RegionStats region_stats(const fem::Mesh& mesh, const WallField& scalar, const std::string& tag);

struct Sphere {
  fem::Point center = fem::Point::Zero();
  double radius = 0;
};

/// Lumped-volume-weighted mean of |u| over vertices inside the sphere.
/// Throws InvalidArgument if no vertex lies inside.
double probe_velocity(const fem::Mesh& mesh, const fem::Field& u, const Sphere& sphere);

/// Snapshot manifest written by coupled runs (snapshots.json).
struct SnapshotEntry {
  int step = 0;
  double t = 0;
  std::filesystem::path file;
};
struct SnapshotSet {
  double rho = 0, mu = 0;
  std::vector<SnapshotEntry> entries;
};
SnapshotSet read_snapshot_manifest(const std::filesystem::path& dir);

} // namespace cardioflow::postproc
