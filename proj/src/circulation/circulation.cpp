#include "cardioflow/circulation/circulation.hpp"

#include "cardioflow/common/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>

namespace cardioflow::circulation {

namespace {

void require_finite(double x, const char* what) {
  if (!std::isfinite(x))
    throw InvalidArgument(fmt::format("circulation: non-finite {}", what));
}

void check_compartment(const Compartment& c, const char* name) {
  require_finite(c.R, name);
  require_finite(c.C, name);
  require_finite(c.L, name);
  if (c.R <= 0 || c.C <= 0 || c.L < 0)
    throw InvalidArgument(fmt::format("circulation: compartment {} needs R > 0, C > 0, L >= 0", name));
}

void check_diode(const Diode& d, const char* name) {
  require_finite(d.R_min, name);
  require_finite(d.R_max, name);
  if (d.R_min <= 0 || d.R_min > d.R_max)
    throw InvalidArgument(fmt::format("circulation: diode {} needs 0 < R_min <= R_max", name));
}

void check_flows(const InterfaceFlows& q) {
  require_finite(q.Q_AV, "Q_AV");
  require_finite(q.Q_PV, "Q_PV");
  require_finite(q.Q_VEN_SYS, "Q_VEN_SYS");
  require_finite(q.Q_VEN_PUL, "Q_VEN_PUL");
}

} // namespace

void CirculationParams::validate() const {
  check_compartment(ar_sys, "AR_SYS");
  check_compartment(ven_sys, "VEN_SYS");
  check_compartment(ar_pul, "AR_PUL");
  check_compartment(ven_pul, "VEN_PUL");
  require_finite(R_up_sys, "R_UP_SYS");
  require_finite(R_up_pul, "R_UP_PUL");
  if (R_up_sys < 0 || R_up_pul < 0)
    throw InvalidArgument("circulation: upstream resistances must be >= 0");
  check_diode(mv, "MV");
  check_diode(av, "AV");
  check_diode(tv, "TV");
  check_diode(pv, "PV");
  require_finite(L_av, "L_AV");
  require_finite(L_pv, "L_PV");
  if (L_av < 0 || L_pv < 0)
    throw InvalidArgument("circulation: valve inductances must be >= 0");
}

CirculationParams CirculationParams::reference() {
  CirculationParams p;
  p.ar_sys = {0.48, 1.50, 0.005};
  p.ven_sys = {0.26, 60.0, 5e-4};
  p.ar_pul = {0.032116, 10.0, 0.0005};
  p.ven_pul = {0.035684, 16.0, 0.0005};
  p.R_up_sys = 0.048;
  p.R_up_pul = 0.0032116;
  p.mv = {0.0075, 75006.2};
  p.av = {0.0355, 75006.2};
  p.tv = {0.0075, 75006.2};
  p.pv = {0.0184, 75006.2};
  p.L_av = 5e-4;
  p.L_pv = 5e-4;
  return p;
}

void CirculationState::validate() const {
  for (double x : {t, p_ar_sys, p_ven_sys, p_ar_pul, p_ven_pul, Q_ar_sys, Q_ar_pul})
    require_finite(x, "state entry");
  if (history.size() > 2)
    throw InvalidArgument("circulation: history holds at most two samples");
  for (const auto& s : history) {
    require_finite(s.t, "history time");
    check_flows(s.q);
  }
  if (history.size() == 2 && !(history[1].t > history[0].t))
    throw InvalidArgument("circulation: history timestamps must increase");
}

void CirculationState::seed_history(const InterfaceFlows& q, double dt) {
  if (!(dt > 0))
    throw InvalidArgument("circulation: seed_history needs dt > 0");
  history = {{t - 2 * dt, q}, {t - dt, q}};
}

CirculationState CirculationState::em_initial() {
  CirculationState s;
  s.p_ar_sys = 83.9;
  s.p_ven_sys = 35.5;
  s.p_ar_pul = 14.90;
  s.p_ven_pul = 13.58;
  return s;
}

CirculationState CirculationState::cfd_initial() {
  CirculationState s;
  s.p_ar_sys = 86.3480;
  s.Q_ar_sys = 109.6429;
  s.p_ven_sys = 34.4923;
  s.p_ar_pul = 22.2310;
  s.Q_ar_pul = 83.2132;
  s.p_ven_pul = 19.5813;
  return s;
}

CirculationState step_imex(const CirculationState& state, const CirculationParams& params,
                           const InterfaceFlows& q3d, double dt) {
  if (!(dt > 0) || !std::isfinite(dt))
    throw InvalidArgument("circulation: step_imex needs dt > 0");
  state.validate();
  check_flows(q3d);
  if (!state.history.empty() && !(state.t > state.history.back().t))
    throw InvalidArgument("circulation: state time must follow the last history sample");

  CirculationState next = state;
  next.t = state.t + dt;
  next.p_ar_sys += dt / params.ar_sys.C * (q3d.Q_AV - state.Q_ar_sys);
  next.p_ven_sys += dt / params.ven_sys.C * (state.Q_ar_sys - q3d.Q_VEN_SYS);
  next.p_ar_pul += dt / params.ar_pul.C * (q3d.Q_PV - state.Q_ar_pul);
  next.p_ven_pul += dt / params.ven_pul.C * (state.Q_ar_pul - q3d.Q_VEN_PUL);

  // L (Q' - Q) / dt = -R Q' + p_AR' - p_VEN'
  auto relax = [dt](const Compartment& c, double Q, double p_ar, double p_ven) {
    return (c.L * Q + dt * (p_ar - p_ven)) / (c.L + dt * c.R);
  };
  next.Q_ar_sys = relax(params.ar_sys, state.Q_ar_sys, next.p_ar_sys, next.p_ven_sys);
  next.Q_ar_pul = relax(params.ar_pul, state.Q_ar_pul, next.p_ar_pul, next.p_ven_pul);

  next.history.push_back({state.t, q3d});
  if (next.history.size() > 2)
    next.history.erase(next.history.begin());
  for (double x : {next.p_ar_sys, next.p_ven_sys, next.p_ar_pul, next.p_ven_pul, next.Q_ar_sys, next.Q_ar_pul})
    if (!std::isfinite(x))
      throw SolverError("circulation: step produced a non-finite state");
  return next;
}

InterfaceData interface_pressures(const CirculationState& state, const CirculationParams& params) {
  state.validate();
  InterfaceFlows q, dq;
  if (!state.history.empty())
    q = state.history.back().q;
  const bool inductive = params.ven_sys.L > 0 || params.ven_pul.L > 0;
  if (state.history.size() >= 2) {
    const auto& a = state.history[state.history.size() - 2];
    const auto& b = state.history.back();
    const double h = b.t - a.t;
    dq.Q_VEN_SYS = (b.q.Q_VEN_SYS - a.q.Q_VEN_SYS) / h;
    dq.Q_VEN_PUL = (b.q.Q_VEN_PUL - a.q.Q_VEN_PUL) / h;
  } else if (inductive) {
    throw InvalidArgument("circulation: interface_pressures needs two history samples when L_VEN > 0");
  }

  InterfaceData out;
  out.p_in_lh = state.p_ven_pul - params.ven_pul.R * q.Q_VEN_PUL - params.ven_pul.L * dq.Q_VEN_PUL;
  out.p_in_rh = state.p_ven_sys - params.ven_sys.R * q.Q_VEN_SYS - params.ven_sys.L * dq.Q_VEN_SYS;
  out.p_out_lh = state.p_ar_sys + params.R_up_sys * q.Q_AV;
  out.p_out_rh = state.p_ar_pul + params.R_up_pul * q.Q_PV;
  out.Q_in_rh = -q.Q_VEN_SYS;
  out.Q_out_rh = q.Q_PV;
  out.Q_in_lh = -q.Q_VEN_PUL;
  out.Q_out_lh = q.Q_AV;
  return out;
}

double diode_flow(const Diode& diode, double dp) {
  return dp / (dp > 0 ? diode.R_min : diode.R_max);
}

// ---- standalone ------------------------------------------------------------

namespace {

double wrap(double t, double period) {
  double s = std::fmod(t, period);
  return s < 0 ? s + period : s;
}

// Fraction of the way from a to b (a < b assumed after wrapping) at time s.
double ramp(double s, double a, double b, double period) {
  double len = wrap(b - a, period);
  double x = wrap(s - a, period) / len;
  return 0.5 * (1.0 - std::cos(std::numbers::pi * x));
}

bool within(double s, double a, double b, double period) {
  return wrap(s - a, period) < wrap(b - a, period);
}

std::function<double(double)> ventricle(ValveTiming inlet, ValveTiming outlet, double edv, double esv,
                                        double period) {
  return [=](double t) {
    const double s = wrap(t, period);
    if (within(s, inlet.open, inlet.close, period))
      return esv + (edv - esv) * ramp(s, inlet.open, inlet.close, period);
    if (within(s, outlet.open, outlet.close, period))
      return edv - (edv - esv) * ramp(s, outlet.open, outlet.close, period);
    if (within(s, inlet.close, outlet.open, period))
      return edv;
    return esv;
  };
}

void check_cycle(ValveTiming inlet, ValveTiming outlet, double period, const char* side) {
  // inlet.close < outlet.open < outlet.close < inlet.open, cyclically
  const double a = wrap(outlet.open - inlet.close, period);
  const double b = wrap(outlet.close - inlet.close, period);
  const double c = wrap(inlet.open - inlet.close, period);
  if (!(a > 0 && a < b && b < c))
    throw InvalidArgument(fmt::format("circulation: {} valve times do not form a cardiac cycle", side));
}

struct SideResult {
  double Q_ven, Q_inlet, Q_outlet;
  double p_atrium, p_ventricle;
  bool inlet_open, outlet_open;
};

// Atrium/ventricle pressures for given volume rates: venous line (R, L),
// atrioventricular diode, semilunar diode + upstream resistance + inductance.
struct SideInput {
  double p_ven, R_ven, L_ven, Q_ven_prev;
  double p_ar, R_up, L_out, Q_out_prev;
  Diode inlet, outlet;
  double dVa, dVv; // mL/s
};

SideResult solve_side(const SideInput& in, double dt, bool inlet_open, bool outlet_open) {
  auto attempt = [&](bool io, bool oo) {
    const double g = 1.0 / (io ? in.inlet.R_min : in.inlet.R_max);
    const double a_v = 1.0 / (in.R_ven + in.L_ven / dt);
    const double b_v = a_v * in.L_ven / dt * in.Q_ven_prev;
    const double a_o = 1.0 / ((oo ? in.outlet.R_min : in.outlet.R_max) + in.R_up + in.L_out / dt);
    const double b_o = a_o * in.L_out / dt * in.Q_out_prev;
    // Q_ven - Q_in = dVa ; Q_in - Q_out = dVv
    const double m00 = -a_v - g, m01 = g, m10 = g, m11 = -g - a_o;
    const double r0 = in.dVa - a_v * in.p_ven - b_v;
    const double r1 = in.dVv - a_o * in.p_ar + b_o;
    const double det = m00 * m11 - m01 * m10;
    SideResult r;
    r.p_atrium = (r0 * m11 - m01 * r1) / det;
    r.p_ventricle = (m00 * r1 - m10 * r0) / det;
    r.Q_ven = a_v * (in.p_ven - r.p_atrium) + b_v;
    r.Q_inlet = g * (r.p_atrium - r.p_ventricle);
    r.Q_outlet = a_o * (r.p_ventricle - in.p_ar) + b_o;
    r.inlet_open = io;
    r.outlet_open = oo;
    return r;
  };
  auto consistent = [&](const SideResult& r) {
    return (r.p_atrium > r.p_ventricle) == r.inlet_open && (r.p_ventricle > in.p_ar) == r.outlet_open;
  };

  SideResult r = attempt(inlet_open, outlet_open);
  for (int it = 0; it < 4 && !consistent(r); ++it)
    r = attempt(r.p_atrium > r.p_ventricle, r.p_ventricle > in.p_ar);
  if (consistent(r))
    return r;
  for (int k = 0; k < 4; ++k) {
    SideResult c = attempt(k & 1, k & 2);
    if (consistent(c))
      return c;
  }
  return r;
}

struct HeartState {
  bool mv = false, av = false, tv = false, pv = false;
};

struct HeartSolve {
  InterfaceFlows q;
  SideResult left, right;
};

HeartSolve solve_heart(const CirculationState& s, const CirculationParams& p, const ChamberDrivers& d, double dt,
                       const HeartState& valves) {
  InterfaceFlows prev;
  if (!s.history.empty())
    prev = s.history.back().q;
  const double t0 = s.t, t1 = s.t + dt;
  SideInput left{s.p_ven_pul, p.ven_pul.R, p.ven_pul.L, prev.Q_VEN_PUL,
                 s.p_ar_sys,  p.R_up_sys,  p.L_av,      prev.Q_AV,
                 p.mv,        p.av,        (d.V_LA(t1) - d.V_LA(t0)) / dt, (d.V_LV(t1) - d.V_LV(t0)) / dt};
  SideInput right{s.p_ven_sys, p.ven_sys.R, p.ven_sys.L, prev.Q_VEN_SYS,
                  s.p_ar_pul,  p.R_up_pul,  p.L_pv,      prev.Q_PV,
                  p.tv,        p.pv,        (d.V_RA(t1) - d.V_RA(t0)) / dt, (d.V_RV(t1) - d.V_RV(t0)) / dt};
  HeartSolve h;
  h.left = solve_side(left, dt, valves.mv, valves.av);
  h.right = solve_side(right, dt, valves.tv, valves.pv);
  h.q.Q_AV = h.left.Q_outlet;
  h.q.Q_VEN_PUL = h.left.Q_ven;
  h.q.Q_PV = h.right.Q_outlet;
  h.q.Q_VEN_SYS = h.right.Q_ven;
  return h;
}

double network_volume(const CirculationState& s, const CirculationParams& p) {
  return p.ar_sys.C * s.p_ar_sys + p.ven_sys.C * s.p_ven_sys + p.ar_pul.C * s.p_ar_pul + p.ven_pul.C * s.p_ven_pul;
}

} // namespace

ChamberDrivers default_drivers(ValveTiming mv, ValveTiming av, ValveTiming tv, ValveTiming pv, double period,
                               const DefaultDriverShape& shape) {
  if (!(period > 0))
    throw InvalidArgument("circulation: period must be positive");
  check_cycle(mv, av, period, "left");
  check_cycle(tv, pv, period, "right");
  ChamberDrivers d;
  d.period = period;
  d.V_LV = ventricle(mv, av, shape.lv_edv, shape.lv_esv, period);
  d.V_RV = ventricle(tv, pv, shape.rv_edv, shape.rv_esv, period);
  auto lv = d.V_LV, rv = d.V_RV;
  d.V_LA = [lv, shape](double t) { return shape.la_min + shape.atrial_fraction * (shape.lv_edv - lv(t)); };
  d.V_RA = [rv, shape](double t) { return shape.ra_min + shape.atrial_fraction * (shape.rv_edv - rv(t)); };
  return d;
}

std::vector<StandaloneSample> run_standalone(const CirculationParams& params, CirculationState initial,
                                             const ChamberDrivers& drivers, const StandaloneOptions& options) {
  params.validate();
  initial.validate();
  if (!drivers.V_LV || !drivers.V_RV || !drivers.V_LA || !drivers.V_RA)
    throw InvalidArgument("circulation: all four chamber drivers are required");
  if (!(options.dt > 0) || options.beats < 1 || options.output_every < 1 || !(drivers.period > 0))
    throw InvalidArgument("circulation: invalid standalone options");
  const double duration = options.beats * drivers.period;
  const long steps = std::lround(duration / options.dt);
  if (std::abs(steps * options.dt - duration) > 1e-9 * duration)
    throw InvalidArgument("circulation: dt must divide the simulated duration");
  if (options.beats > 1) {
    for (const auto* f : {&drivers.V_LV, &drivers.V_RV, &drivers.V_LA, &drivers.V_RA}) {
      for (int k = 0; k < 32; ++k) {
        const double t = initial.t + drivers.period * k / 32.0;
        const double a = (*f)(t), b = (*f)(t + drivers.period);
        if (std::abs(a - b) > 1e-9 * std::max(1.0, std::abs(a)))
          throw InvalidArgument("circulation: chamber drivers are not periodic");
      }
    }
  }

  std::vector<StandaloneSample> out;
  HeartState valves;
  CirculationState s = initial;
  for (long n = 0; n <= steps; ++n) {
    const HeartSolve h = solve_heart(s, params, drivers, options.dt, valves);
    valves = {h.left.inlet_open, h.left.outlet_open, h.right.inlet_open, h.right.outlet_open};
    if (n % options.output_every == 0 || n == steps) {
      StandaloneSample r;
      r.t = s.t;
      r.p_ar_sys = s.p_ar_sys;
      r.p_ven_sys = s.p_ven_sys;
      r.p_ar_pul = s.p_ar_pul;
      r.p_ven_pul = s.p_ven_pul;
      r.Q_ar_sys = s.Q_ar_sys;
      r.Q_ar_pul = s.Q_ar_pul;
      r.Q_av = h.q.Q_AV;
      r.Q_pv = h.q.Q_PV;
      r.Q_ven_sys = h.q.Q_VEN_SYS;
      r.Q_ven_pul = h.q.Q_VEN_PUL;
      r.Q_mv = h.left.Q_inlet;
      r.Q_tv = h.right.Q_inlet;
      r.p_lv = h.left.p_ventricle;
      r.p_la = h.left.p_atrium;
      r.p_rv = h.right.p_ventricle;
      r.p_ra = h.right.p_atrium;
      r.V_lv = drivers.V_LV(s.t);
      r.V_rv = drivers.V_RV(s.t);
      r.V_la = drivers.V_LA(s.t);
      r.V_ra = drivers.V_RA(s.t);
      r.mv_open = valves.mv;
      r.av_open = valves.av;
      r.tv_open = valves.tv;
      r.pv_open = valves.pv;
      r.total_volume = network_volume(s, params) + r.V_lv + r.V_rv + r.V_la + r.V_ra;
      out.push_back(r);
    }
    if (n < steps)
      s = step_imex(s, params, h.q, options.dt);
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const std::vector<StandaloneSample>& series) {
  std::ofstream f(path);
  if (!f)
    throw Error(fmt::format("cannot write {}", path.string()));
  f << "t,p_AR_SYS,p_VEN_SYS,p_AR_PUL,p_VEN_PUL,Q_AR_SYS,Q_AR_PUL,Q_AV,Q_PV,Q_VEN_SYS,Q_VEN_PUL,Q_MV,Q_TV,"
       "p_LV,p_RV,p_LA,p_RA,V_LV,V_RV,V_LA,V_RA,MV_open,AV_open,TV_open,PV_open,V_total\n";
  for (const auto& r : series) {
    f << fmt::format("{:.6f},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},"
                     "{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:d},{:d},{:d},{:d},{:.12g}\n",
                     r.t, r.p_ar_sys, r.p_ven_sys, r.p_ar_pul, r.p_ven_pul, r.Q_ar_sys, r.Q_ar_pul, r.Q_av, r.Q_pv,
                     r.Q_ven_sys, r.Q_ven_pul, r.Q_mv, r.Q_tv, r.p_lv, r.p_rv, r.p_la, r.p_ra, r.V_lv, r.V_rv, r.V_la,
                     r.V_ra, int(r.mv_open), int(r.av_open), int(r.tv_open), int(r.pv_open), r.total_volume);
  }
}

CirculationParams params_from_toml(const toml::Table& table) {
  const std::string preset = toml::get_string(table, "preset", "reference");
  if (preset != "reference")
    throw InvalidArgument(fmt::format("circulation: unknown parameter preset '{}'", preset));
  CirculationParams p = CirculationParams::reference();
  const std::map<std::string, double*> keys{
      {"R_AR_SYS", &p.ar_sys.R},   {"C_AR_SYS", &p.ar_sys.C},   {"L_AR_SYS", &p.ar_sys.L},
      {"R_VEN_SYS", &p.ven_sys.R}, {"C_VEN_SYS", &p.ven_sys.C}, {"L_VEN_SYS", &p.ven_sys.L},
      {"R_AR_PUL", &p.ar_pul.R},   {"C_AR_PUL", &p.ar_pul.C},   {"L_AR_PUL", &p.ar_pul.L},
      {"R_VEN_PUL", &p.ven_pul.R}, {"C_VEN_PUL", &p.ven_pul.C}, {"L_VEN_PUL", &p.ven_pul.L},
      {"R_UP_SYS", &p.R_up_sys},   {"R_UP_PUL", &p.R_up_pul},
      {"R_MIN_MV", &p.mv.R_min},   {"R_MAX_MV", &p.mv.R_max},   {"R_MIN_AV", &p.av.R_min},
      {"R_MAX_AV", &p.av.R_max},   {"R_MIN_TV", &p.tv.R_min},   {"R_MAX_TV", &p.tv.R_max},
      {"R_MIN_PV", &p.pv.R_min},   {"R_MAX_PV", &p.pv.R_max},   {"L_AV", &p.L_av},
      {"L_PV", &p.L_pv}};
  static const std::array<const char*, 9> state_keys{"preset", "initial", "p_AR_SYS", "p_VEN_SYS", "p_AR_PUL",
                                                     "p_VEN_PUL", "Q_AR_SYS", "Q_AR_PUL", "seed_flows"};
  for (const auto& [key, value] : table) {
    auto it = keys.find(key);
    if (it != keys.end()) {
      if (!value.is_number())
        throw ParseError(fmt::format("circulation: '{}' must be a number", key));
      *it->second = value.as_number();
    } else if (std::find(state_keys.begin(), state_keys.end(), key) == state_keys.end() && !value.is_table()) {
      throw ParseError(fmt::format("circulation: unknown key '{}'", key));
    }
  }
  p.validate();
  return p;
}

CirculationState state_from_toml(const toml::Table& table) {
  const std::string which = toml::get_string(table, "initial", "cfd");
  CirculationState s;
  if (which == "cfd")
    s = CirculationState::cfd_initial();
  else if (which == "em")
    s = CirculationState::em_initial();
  else
    throw InvalidArgument(fmt::format("circulation: unknown initial state '{}'", which));
  s.p_ar_sys = toml::get_number(table, "p_AR_SYS", s.p_ar_sys);
  s.p_ven_sys = toml::get_number(table, "p_VEN_SYS", s.p_ven_sys);
  s.p_ar_pul = toml::get_number(table, "p_AR_PUL", s.p_ar_pul);
  s.p_ven_pul = toml::get_number(table, "p_VEN_PUL", s.p_ven_pul);
  s.Q_ar_sys = toml::get_number(table, "Q_AR_SYS", s.Q_ar_sys);
  s.Q_ar_pul = toml::get_number(table, "Q_AR_PUL", s.Q_ar_pul);
  s.validate();
  return s;
}

} // namespace cardioflow::circulation
