#pragma once

// Stabilized P1-P1 Navier-Stokes in ALE form, semi-implicit BDF1.

#include "cardioflow/fem/field.hpp"
#include "cardioflow/fem/mesh.hpp"
#include "cardioflow/fem/sparse.hpp"
#include "cardioflow/riis/riis.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace cardioflow::fluid {

using fem::Field;
using fem::Mesh;
using fem::Point;

struct FluidProperties {
  double rho = 1060.0;  // kg/m^3
  double mu = 3.5e-3;   // kg/(m s)
  void validate() const;
};

enum class ViscousForm { stress, laplacian };
ViscousForm parse_viscous_form(const std::string& name);

struct StabilizationOptions {
  bool enabled = true;      // SUPG/PSPG + grad-div
  double sigma_t = 4.0;
  double c_inv = 36.0;
  double c_continuity = 12.0; // tau_C = h^2 / (c_continuity tau_M)
  bool backflow = true;
  double beta = 1.0;
};

/// Every boundary tag gets exactly one condition.
struct BoundaryConditions {
  std::map<std::string, double> neumann;  // sigma n = -p n, Pa
  std::set<std::string> walls;            // u = u_ALE
  std::map<std::string, Point> velocity;  // u = given constant

  void validate(const Mesh& mesh) const;
};

struct FluidOptions {
  FluidProperties props;
  ViscousForm viscous = ViscousForm::stress;
  StabilizationOptions stab;
  fem::SolveOptions solver{fem::SolverMethod::direct, 1e-10, 2000, 200};
};

struct FluidStepInputs {
  const Mesh* mesh = nullptr; // configuration at t_{n+1}
  Field u_n;
  Field u_ale;
  BoundaryConditions bc;
  double dt = 0; // +inf drops the time derivative (steady Picard step)
  /// Optional immersed-surface penalty, evaluated on `mesh`.
  const riis::RiisCoefficients* riis = nullptr;
  /// sum_k w_k,i (u_ALE + u_Sigma,k); required when riis is set.
  const Field* riis_target = nullptr;
};

struct FluidStepResult {
  Field u;
  Field p;
  int solve_count = 0;
  fem::SolveStats stats;
  double residual = 0;  // relative residual of the assembled system
  double cfl = 0;       // max |u_n - u_ALE| dt / h
};

FluidStepResult fluid_step(const FluidStepInputs& inputs, const FluidOptions& options);

struct SteadyOptions {
  double tol = 1e-10; // max |u_k+1 - u_k| relative to max |u_k+1|
  int max_iter = 200;
};

struct SteadyResult {
  FluidStepResult last;
  int iterations = 0;
  double change = 0;
  bool converged = false;
};

/// Picard iteration of the dt = inf step starting from inputs.u_n.
SteadyResult solve_steady(FluidStepInputs inputs, const FluidOptions& options, const SteadyOptions& steady = {});

/// Diameter of the ball (disc) with the cell's volume (area).
double cell_size(const Mesh& mesh, std::size_t cell);

struct StabilizationParameters {
  std::vector<double> tau_m;
  std::vector<double> tau_c;
};

/// tau_M = (sigma_t (rho/dt)^2 + (2 rho |a| / h)^2 + (C_inv mu / h^2)^2 + c_R^2)^(-1/2)
/// with a the cell mean of u_conv and c_R the cell mean of the penalty
/// coefficient (optional); tau_C = h^2 / (c_continuity tau_M).
StabilizationParameters stabilization_parameters(const Mesh& mesh, const Field& u_conv, double dt,
                                                 const FluidProperties& props, const StabilizationOptions& stab = {},
                                                 const std::vector<double>* riis_cell_mean = nullptr);

struct EnergyReport {
  double kinetic = 0; // 1/2 rho int |u|^2, J (J/m in 2D)
  /// Per tag: int 1/2 rho |u|^2 (u - u_ALE).n and int p (u - u_ALE).n.
  std::map<std::string, double> kinetic_flux;
  std::map<std::string, double> pressure_power;
};

EnergyReport energy_report(const Mesh& mesh, const Field& u, const Field& p, const FluidProperties& props,
                           const Field* u_ale = nullptr);

} // namespace cardioflow::fluid
