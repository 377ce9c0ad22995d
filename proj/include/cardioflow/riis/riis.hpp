#pragma once

#include "cardioflow/fem/field.hpp"
#include "cardioflow/fem/mesh.hpp"
#include "cardioflow/fem/sparse.hpp"
#include "cardioflow/riis/surface.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cardioflow::riis {

struct ValveSpec {
  std::string name;
  double R = 1e4;        // kg/(m s)
  double eps = 1e-3;     // m
  double open_time = 0;  // s, in [0, period)
  double close_time = 0; // s
  std::shared_ptr<const Surface> open_surface;   // may be null
  std::shared_ptr<const Surface> closed_surface; // may be null
  Point leaflet_velocity = Point::Zero();        // m/s

  void validate(double period) const;
};

/// (1 + cos(pi phi / eps)) / (2 eps) on |phi| <= eps, zero outside.
double smoothed_delta(double phi, double eps);

/// Open on [open, close) when open < close, on [open, T) u [0, close)
/// otherwise; t is taken modulo the period.
bool valve_open_at(const ValveSpec& spec, double t, double period);

/// Valve table with the reference timing, thickness and resistance for MV,
/// AV, TV and PV (no surfaces attached).
std::vector<ValveSpec> zygote_times_preset();

/// Per-vertex distances to the surfaces of a set of valves, cached per
/// valve and state. Surfaces live in reference coordinates, so the cache is
/// valid for the whole run on a moving mesh.
class DistanceCache {
public:
  explicit DistanceCache(const fem::Mesh& reference);
  /// Null when the valve has no surface for that state.
  const std::vector<double>* distances(const ValveSpec& valve, bool open);

private:
  const fem::Mesh* mesh_;
  std::map<std::pair<std::string, bool>, std::vector<double>> cache_;
};

struct ActiveValve {
  const ValveSpec* spec = nullptr;
  const std::vector<double>* phi = nullptr; // per-vertex signed distance
};

struct RiisCoefficients {
  /// Integral of c phi_i per vertex; c = sum_k R_k / eps_k delta(phi_k).
  std::vector<double> vertex_weight;
  /// Per valve contribution to vertex_weight (for leaflet velocities).
  std::vector<std::vector<double>> valve_weight;
  /// Mean of c over each cell.
  std::vector<double> cell_mean;
};

/// Band integrals with P1-interpolated distances and a refined quadrature
/// (`levels` uniform subdivisions). Cells outside every band are skipped.
RiisCoefficients riis_coefficients(const fem::Mesh& mesh, const std::vector<ActiveValve>& valves, int levels = 2);

/// Lumped vector mass matrix weighted by c, node-major (dim entries per
/// vertex). Symmetric and diagonal.
fem::SparseOperator assemble_riis_operator(const fem::Mesh& mesh, const RiisCoefficients& coefficients);

/// Right-hand side of the penalty: sum_k w_k,i (u_ALE,i + u_Sigma,k).
fem::Field riis_target_load(const fem::Mesh& mesh, const std::vector<ActiveValve>& valves,
                            const RiisCoefficients& coefficients, const fem::Field& u_ale);

/// Largest edge among cells touched by the valve band; a warning is due
/// when eps < 1.5 h. Returns 0 if the band misses the mesh.
double band_mesh_size(const fem::Mesh& mesh, const ActiveValve& valve);

} // namespace cardioflow::riis
