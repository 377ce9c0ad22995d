#pragma once

// Open lumped-parameter circulation: systemic/pulmonary arteries and veins
// as RLC compartments, coupled to the heart through four interface flows.
// Units: mmHg, mL, s.

#include "cardioflow/common/toml.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace cardioflow::circulation {

struct Compartment {
  double R = 0; // mmHg s / mL
  double C = 0; // mL / mmHg
  double L = 0; // mmHg s^2 / mL
};

struct Diode {
  double R_min = 0;
  double R_max = 0;
};

struct CirculationParams {
  Compartment ar_sys, ven_sys, ar_pul, ven_pul;
  double R_up_sys = 0, R_up_pul = 0;
  Diode mv, av, tv, pv;
  double L_av = 0, L_pv = 0;

  /// Throws InvalidArgument unless R, C > 0, L >= 0 and R_min <= R_max.
  void validate() const;

  /// Reference parameter set.
  static CirculationParams reference();
};

/// Forward-positive flows across the heart/network interfaces, mL/s.
/// Q_VEN_* is the venous return into the atria.
struct InterfaceFlows {
  double Q_AV = 0, Q_PV = 0, Q_VEN_SYS = 0, Q_VEN_PUL = 0;
};

struct FlowSample {
  double t = 0;
  InterfaceFlows q;
};

struct CirculationState {
  double t = 0;
  double p_ar_sys = 0, p_ven_sys = 0, p_ar_pul = 0, p_ven_pul = 0; // mmHg
  double Q_ar_sys = 0, Q_ar_pul = 0;                                // mL/s
  /// Most recent last; at most two samples are kept.
  std::vector<FlowSample> history;

  void validate() const;

  /// Appends two copies of `q` at t - 2 dt and t - dt.
  void seed_history(const InterfaceFlows& q, double dt);

  static CirculationState em_initial();
  static CirculationState cfd_initial();
};

struct InterfaceData {
  double p_in_rh = 0, p_out_rh = 0, p_in_lh = 0, p_out_lh = 0; // mmHg
  double Q_in_rh = 0, Q_out_rh = 0, Q_in_lh = 0, Q_out_lh = 0; // mL/s, outward-normal sign
};

/// One first-order IMEX step from state.t to state.t + dt. Compartment
/// pressures are advanced explicitly with the flows at t_n; the arterial
/// flows relax implicitly against the updated pressures. `q3d` is recorded
/// in the history at t_n.
CirculationState step_imex(const CirculationState& state, const CirculationParams& params,
                           const InterfaceFlows& q3d, double dt);

/// Pressures handed to the 3D problem and the matching flow echoes. The
/// venous inductance term uses a backward difference over the history.
InterfaceData interface_pressures(const CirculationState& state, const CirculationParams& params);

// ---- standalone surrogate -------------------------------------------------

/// Non-ideal diode: dp / R_min when dp > 0, dp / R_max otherwise.
double diode_flow(const Diode& diode, double dp);

struct ValveTiming {
  double open = 0;
  double close = 0;
};

/// Chamber volume drivers (mL) with period `period` (s).
struct ChamberDrivers {
  std::function<double(double)> V_LV, V_RV, V_LA, V_RA;
  double period = 0.8;
};

struct DefaultDriverShape {
  double lv_edv = 151.0, lv_esv = 66.4;
  double rv_edv = 159.0, rv_esv = 74.4;
  double la_min = 50.0, ra_min = 50.0;
  double atrial_fraction = 0.5;
};

/// Ventricles: cosine ramps between end-diastolic and end-systolic volume,
/// ejecting while the semilunar valve is open and filling while the
/// atrioventricular valve is open. Atria take up `atrial_fraction` of the
/// ventricular volume change.
ChamberDrivers default_drivers(ValveTiming mv, ValveTiming av, ValveTiming tv, ValveTiming pv,
                               double period, const DefaultDriverShape& shape = {});

struct StandaloneOptions {
  double dt = 1e-3;
  int beats = 1;
  int output_every = 1;
};

struct StandaloneSample {
  double t = 0;
  double p_ar_sys = 0, p_ven_sys = 0, p_ar_pul = 0, p_ven_pul = 0;
  double Q_ar_sys = 0, Q_ar_pul = 0;
  double Q_av = 0, Q_pv = 0, Q_ven_sys = 0, Q_ven_pul = 0, Q_mv = 0, Q_tv = 0;
  double p_lv = 0, p_rv = 0, p_la = 0, p_ra = 0;
  double V_lv = 0, V_rv = 0, V_la = 0, V_ra = 0;
  bool mv_open = false, av_open = false, tv_open = false, pv_open = false;
  double total_volume = 0; // sum C p over compartments + chamber volumes
};

/// Runs the circulation with the 3D flows replaced by chamber volume
/// changes routed through pressure-switched diodes.
std::vector<StandaloneSample> run_standalone(const CirculationParams& params, CirculationState initial,
                                             const ChamberDrivers& drivers, const StandaloneOptions& options);

void write_csv(const std::filesystem::path& path, const std::vector<StandaloneSample>& series);

/// Reads a parameter table. `preset` (default "reference") provides
/// defaults; keys such as R_AR_SYS, C_VEN_PUL, R_MIN_AV, L_AV override them.
CirculationParams params_from_toml(const toml::Table& table);

/// Keys p_AR_SYS, p_VEN_SYS, p_AR_PUL, p_VEN_PUL, Q_AR_SYS, Q_AR_PUL over the
/// preset named by `initial` ("cfd" or "em", default "cfd").
CirculationState state_from_toml(const toml::Table& table);

} // namespace cardioflow::circulation
