#include "cardioflow/riis/riis.hpp"

#include "cardioflow/common/error.hpp"
#include "cardioflow/common/parallel.hpp"
#include "cardioflow/fem/quadrature.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cardioflow::riis {

void ValveSpec::validate(double period) const {
  if (!(R > 0) || !std::isfinite(R))
    throw InvalidArgument(fmt::format("valve {}: R must be positive", name));
  if (!(eps > 0) || !std::isfinite(eps))
    throw InvalidArgument(fmt::format("valve {}: eps must be positive", name));
  if (open_time == close_time)
    throw InvalidArgument(fmt::format("valve {}: open and close times coincide", name));
  for (double t : {open_time, close_time})
    if (!(t >= 0 && t < period))
      throw InvalidArgument(fmt::format("valve {}: times must lie in [0, {})", name, period));
  if (!leaflet_velocity.allFinite())
    throw InvalidArgument(fmt::format("valve {}: non-finite leaflet velocity", name));
}

double smoothed_delta(double phi, double eps) {
  if (!(std::abs(phi) <= eps))
    return 0.0;
  return (1.0 + std::cos(std::numbers::pi * phi / eps)) / (2.0 * eps);
}

bool valve_open_at(const ValveSpec& spec, double t, double period) {
  double s = std::fmod(t, period);
  if (s < 0)
    s += period;
  if (spec.open_time < spec.close_time)
    return s >= spec.open_time && s < spec.close_time;
  return s >= spec.open_time || s < spec.close_time;
}

std::vector<ValveSpec> zygote_times_preset() {
  auto make = [](const char* name, double open, double close, double eps_mm) {
    ValveSpec v;
    v.name = name;
    v.R = 1e4;
    v.eps = eps_mm * 1e-3;
    v.open_time = open;
    v.close_time = close;
    return v;
  };
  return {make("MV", 0.710, 0.208, 0.68), make("AV", 0.262, 0.666, 0.67), make("TV", 0.700, 0.194, 0.77),
          make("PV", 0.279, 0.677, 0.52)};
}

DistanceCache::DistanceCache(const fem::Mesh& reference) : mesh_(&reference) {}

const std::vector<double>* DistanceCache::distances(const ValveSpec& valve, bool open) {
  const auto& surface = open ? valve.open_surface : valve.closed_surface;
  if (!surface)
    return nullptr;
  const auto key = std::make_pair(valve.name, open);
  auto it = cache_.find(key);
  if (it != cache_.end())
    return &it->second;
  surface->validate();
  std::vector<double> phi(mesh_->num_vertices());
  for_each_chunk(phi.size(), 256, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v)
      phi[v] = signed_distance(*surface, mesh_->vertex(v));
  });
  return &cache_.emplace(key, std::move(phi)).first->second;
}

namespace {

bool band_touches(const fem::Mesh& mesh, std::size_t c, const ActiveValve& valve) {
  double lo = 1e300, hi = -1e300;
  for (int v : mesh.cell(c)) {
    lo = std::min(lo, (*valve.phi)[v]);
    hi = std::max(hi, (*valve.phi)[v]);
  }
  return lo <= valve.spec->eps && hi >= -valve.spec->eps;
}

} // namespace

RiisCoefficients riis_coefficients(const fem::Mesh& mesh, const std::vector<ActiveValve>& valves, int levels) {
  const std::size_t nv = mesh.num_vertices(), nc = mesh.num_cells();
  const int nloc = mesh.vertices_per_cell();
  const std::size_t nk = valves.size();
  for (const auto& a : valves) {
    if (!a.spec || !a.phi || a.phi->size() != nv)
      throw InvalidArgument("riis: active valve needs a spec and per-vertex distances");
  }
  RiisCoefficients out;
  out.vertex_weight.assign(nv, 0.0);
  out.valve_weight.assign(nk, std::vector<double>(nv, 0.0));
  out.cell_mean.assign(nc, 0.0);
  if (nk == 0)
    return out;

  const fem::QuadratureRule rule = fem::refined_cell_rule(mesh.dim(), levels);
  // Per cell and valve, the local weights; scattered serially afterwards so
  // the sums do not depend on the thread count.
  std::vector<double> local(nc * nk * nloc, 0.0);
  std::vector<char> touched(nc * nk, 0);
  for_each_chunk(nc, 1024, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      const auto cell = mesh.cell(c);
      const double vol = mesh.cell_volume(c);
      for (std::size_t k = 0; k < nk; ++k) {
        if (!band_touches(mesh, c, valves[k]))
          continue;
        touched[c * nk + k] = 1;
        const double eps = valves[k].spec->eps, scale = valves[k].spec->R / eps;
        double* w = &local[(c * nk + k) * nloc];
        for (std::size_t q = 0; q < rule.size(); ++q) {
          double phi = 0;
          for (int j = 0; j < nloc; ++j)
            phi += rule.points[q][j] * (*valves[k].phi)[cell[j]];
          const double cq = scale * smoothed_delta(phi, eps) * rule.weights[q];
          if (cq == 0.0)
            continue;
          out.cell_mean[c] += cq;
          for (int j = 0; j < nloc; ++j)
            w[j] += vol * cq * rule.points[q][j];
        }
      }
    }
  });
  for (std::size_t c = 0; c < nc; ++c) {
    const auto cell = mesh.cell(c);
    for (std::size_t k = 0; k < nk; ++k) {
      if (!touched[c * nk + k])
        continue;
      const double* w = &local[(c * nk + k) * nloc];
      for (int j = 0; j < nloc; ++j) {
        out.valve_weight[k][cell[j]] += w[j];
        out.vertex_weight[cell[j]] += w[j];
      }
    }
  }
  return out;
}

fem::SparseOperator assemble_riis_operator(const fem::Mesh& mesh, const RiisCoefficients& coefficients) {
  const int dim = mesh.dim();
  const auto n = static_cast<Eigen::Index>(mesh.num_vertices() * dim);
  if (coefficients.vertex_weight.size() != mesh.num_vertices())
    throw InvalidArgument("riis: coefficients do not match the mesh");
  std::vector<fem::Triplet> trip;
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    const double w = coefficients.vertex_weight[v];
    if (w == 0.0)
      continue;
    for (int c = 0; c < dim; ++c)
      trip.emplace_back(int(v * dim + c), int(v * dim + c), w);
  }
  fem::SparseOperator op;
  op.matrix.resize(n, n);
  op.matrix.setFromTriplets(trip.begin(), trip.end());
  op.symmetric = true;
  return op;
}

fem::Field riis_target_load(const fem::Mesh& mesh, const std::vector<ActiveValve>& valves,
                            const RiisCoefficients& coefficients, const fem::Field& u_ale) {
  const int dim = mesh.dim();
  if (u_ale.num_nodes() != mesh.num_vertices() || u_ale.components != dim)
    throw InvalidArgument("riis: u_ale must be a vector field on the mesh");
  fem::Field out(mesh.num_vertices(), dim);
  for (std::size_t k = 0; k < valves.size(); ++k) {
    const auto& w = coefficients.valve_weight.at(k);
    const Point& us = valves[k].spec->leaflet_velocity;
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
      if (w[v] == 0.0)
        continue;
      for (int c = 0; c < dim; ++c)
        out(v, c) += w[v] * (u_ale(v, c) + us[c]);
    }
  }
  return out;
}

double band_mesh_size(const fem::Mesh& mesh, const ActiveValve& valve) {
  double h = 0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    if (!band_touches(mesh, c, valve))
      continue;
    const auto cell = mesh.cell(c);
    for (int i = 0; i < mesh.vertices_per_cell(); ++i)
      for (int j = i + 1; j < mesh.vertices_per_cell(); ++j)
        h = std::max(h, (mesh.vertex(cell[i]) - mesh.vertex(cell[j])).norm());
  }
  return h;
}

} // namespace cardioflow::riis
