#include "cardioflow/coupling/config.hpp"

#include "cardioflow/fem/vtk.hpp"
#include "cardioflow/motion/timeline.hpp"
#include "cardioflow/riis/surface.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace cardioflow::coupling {

namespace fs = std::filesystem;
using fem::Point;

namespace {

void check_keys(const toml::Table& t, std::initializer_list<const char*> allowed, const std::string& section) {
  for (const auto& [key, value] : t) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ParseError(fmt::format("config: unknown key '{}' in [{}]", key, section));
  }
}

const toml::Table& section(const toml::Table& root, const char* name) {
  static const toml::Table empty;
  const auto* t = toml::find_table(root, name);
  return t ? *t : empty;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::vector<Point> points_of(const toml::Value& v, const std::string& what) {
  std::vector<Point> pts;
  for (const auto& row : v.as_array()) {
    const auto xs = row.as_numbers();
    if (xs.size() < 2 || xs.size() > 3)
      throw ParseError(fmt::format("config: {} points need 2 or 3 coordinates", what));
    pts.emplace_back(xs[0], xs[1], xs.size() == 3 ? xs[2] : 0.0);
  }
  return pts;
}

std::shared_ptr<const riis::Surface> surface_of(const toml::Table& v, const char* state, const fs::path& base) {
  const std::string seg = fmt::format("{}_segment", state);
  const std::string file = fmt::format("{}_surface", state);
  if (v.count(seg) && v.count(file))
    throw ParseError(fmt::format("config: valve has both {} and {}", seg, file));
  if (v.count(seg))
    return std::make_shared<riis::Surface>(riis::polyline(points_of(v.at(seg), seg)));
  if (v.count(file)) {
    const fs::path p = resolve(base, v.at(file).as_string());
    if (p.extension() == ".stl")
      return std::make_shared<riis::Surface>(riis::read_stl(p));
    return std::make_shared<riis::Surface>(riis::read_polyline_csv(p));
  }
  return nullptr;
}

riis::ValveSpec valve_from_toml(const toml::Table& v, const fs::path& base, const std::string& default_preset) {
  check_keys(v,
             {"name", "preset", "R", "eps", "open", "close", "open_segment", "closed_segment", "open_surface",
              "closed_surface", "leaflet_velocity"},
             "valve");
  riis::ValveSpec spec;
  spec.name = toml::get_string(v, "name", "");
  if (spec.name.empty())
    throw ParseError("config: every [[valve]] needs a name");
  const std::string preset = toml::get_string(v, "preset", default_preset);
  if (!preset.empty()) {
    if (preset != "zygote-times")
      throw ParseError(fmt::format("config: unknown valve preset '{}'", preset));
    bool found = false;
    for (const auto& p : riis::zygote_times_preset()) {
      if (p.name == spec.name) {
        spec = p;
        found = true;
      }
    }
    if (!found)
      throw ParseError(fmt::format("config: preset has no valve named '{}'", spec.name));
  }
  spec.R = toml::get_number(v, "R", spec.R);
  spec.eps = toml::get_number(v, "eps", spec.eps);
  spec.open_time = toml::get_number(v, "open", spec.open_time);
  spec.close_time = toml::get_number(v, "close", spec.close_time);
  spec.open_surface = surface_of(v, "open", base);
  spec.closed_surface = surface_of(v, "closed", base);
  if (v.count("leaflet_velocity")) {
    const auto xs = v.at("leaflet_velocity").as_numbers();
    if (xs.size() < 2 || xs.size() > 3)
      throw ParseError("config: leaflet_velocity needs 2 or 3 components");
    spec.leaflet_velocity = Point(xs[0], xs[1], xs.size() == 3 ? xs[2] : 0.0);
  }
  return spec;
}

fluid::FluidOptions fluid_from_toml(const toml::Table& t) {
  check_keys(t,
             {"rho", "mu", "viscous", "stabilization", "backflow", "beta", "sigma_t", "c_inv", "c_continuity",
              "solver", "tol", "max_iter"},
             "fluid");
  fluid::FluidOptions o;
  o.props.rho = toml::get_number(t, "rho", o.props.rho);
  o.props.mu = toml::get_number(t, "mu", o.props.mu);
  o.viscous = fluid::parse_viscous_form(toml::get_string(t, "viscous", "stress"));
  o.stab.enabled = toml::get_boolean(t, "stabilization", o.stab.enabled);
  o.stab.backflow = toml::get_boolean(t, "backflow", o.stab.backflow);
  o.stab.beta = toml::get_number(t, "beta", o.stab.beta);
  o.stab.sigma_t = toml::get_number(t, "sigma_t", o.stab.sigma_t);
  o.stab.c_inv = toml::get_number(t, "c_inv", o.stab.c_inv);
  o.stab.c_continuity = toml::get_number(t, "c_continuity", o.stab.c_continuity);
  const std::string solver = toml::get_string(t, "solver", "direct");
  if (solver == "direct")
    o.solver.method = fem::SolverMethod::direct;
  else if (solver == "gmres")
    o.solver.method = fem::SolverMethod::gmres;
  else
    throw ParseError(fmt::format("config: fluid solver must be 'direct' or 'gmres', not '{}'", solver));
  o.solver.rel_tol = toml::get_number(t, "tol", o.solver.rel_tol);
  o.solver.max_iter = static_cast<int>(toml::get_number(t, "max_iter", o.solver.max_iter));
  o.props.validate();
  return o;
}

circulation::InterfaceFlows seed_from_toml(const toml::Table& c) {
  circulation::InterfaceFlows q;
  const auto* v = toml::find(c, "seed_flows");
  if (!v)
    return q;
  if (v->is_string()) {
    if (v->as_string() == "zero")
      return q;
    if (v->as_string() == "cfd") {
      q.Q_VEN_SYS = 112.9209;
      q.Q_VEN_PUL = 262.6397;
      return q;
    }
    throw ParseError(fmt::format("config: seed_flows must be 'zero', 'cfd' or a table"));
  }
  const auto& t = v->as_table();
  check_keys(t, {"Q_AV", "Q_PV", "Q_VEN_SYS", "Q_VEN_PUL"}, "circulation.seed_flows");
  q.Q_AV = toml::get_number(t, "Q_AV", 0);
  q.Q_PV = toml::get_number(t, "Q_PV", 0);
  q.Q_VEN_SYS = toml::get_number(t, "Q_VEN_SYS", 0);
  q.Q_VEN_PUL = toml::get_number(t, "Q_VEN_PUL", 0);
  return q;
}

std::vector<double> ventricle_frame_times(double period, double step, double start, double end) {
  std::vector<double> times;
  const int n = static_cast<int>(std::ceil(period / step - 1e-9));
  for (int k = 0; k <= n; ++k)
    times.push_back(std::min(period, k * step));
  times.push_back(start);
  times.push_back(end);
  std::sort(times.begin(), times.end());
  std::vector<double> out;
  for (double t : times)
    if (out.empty() || t - out.back() > 1e-9)
      out.push_back(t);
  return out;
}

} // namespace

fem::Mesh mesh_from_toml(const toml::Table& t, const fs::path& base) {
  const std::string kind = toml::get_string(t, "kind", "box");
  if (kind == "box") {
    check_keys(t, {"kind", "extents", "resolution"}, "mesh");
    const auto* e = toml::find(t, "extents");
    const auto* r = toml::find(t, "resolution");
    if (!e || !r)
      throw ParseError("config: box mesh needs extents and resolution");
    std::vector<int> res;
    for (double x : r->as_numbers())
      res.push_back(static_cast<int>(x));
    return fem::generate_box_mesh(static_cast<int>(e->as_numbers().size()), e->as_numbers(), res);
  }
  if (kind == "ventricle") {
    check_keys(t, {"kind", "a", "b", "n"}, "mesh");
    return motion::ventricle_mesh(toml::require_number(t, "a"), toml::require_number(t, "b"),
                                  static_cast<int>(toml::require_number(t, "n")));
  }
  if (kind == "vtk") {
    check_keys(t, {"kind", "file"}, "mesh");
    return fem::mesh_from_vtk(fem::read_vtk(resolve(base, toml::get_string(t, "file", ""))));
  }
  throw ParseError(fmt::format("config: unknown mesh kind '{}'", kind));
}

std::function<double(double)> ejection_area_ratio(double ratio, double start, double end) {
  if (!(ratio > 0) || !(end > start))
    throw InvalidArgument("ventricle waveform: need ratio > 0 and end > start");
  return [=](double t) {
    if (t <= start)
      return 1.0;
    if (t >= end)
      return ratio;
    const double s = (t - start) / (end - start);
    return 1.0 - (1.0 - ratio) * 0.5 * (1.0 - std::cos(std::numbers::pi * s));
  };
}

MotionBuild build_motion(const fem::Mesh& reference, const motion::MotionGenerator& generator,
                         const std::vector<double>& times, bool periodic, double lambda,
                         const motion::StiffeningOptions& stiffening) {
  motion::DisplacementFrameSet frames;
  frames.times = times;
  frames.periodic = periodic;
  frames.period = periodic ? generator.period() : 0.0;
  for (double t : times)
    frames.frames.push_back(generator.displacement(reference, t));
  const fem::Field s = motion::stiffening_field(reference, stiffening);
  const auto extended = motion::extend_frames(reference, s, frames, generator.moving_tags());
  auto timeline = std::make_shared<const motion::DisplacementTimeline>(motion::DisplacementTimeline::fit(extended, lambda));
  MotionBuild out;
  out.source = [timeline](double t) { return timeline->evaluate(t); };
  out.end = periodic ? std::numeric_limits<double>::infinity() : timeline->t_end();
  return out;
}

RunConfig run_config_from_toml(const toml::Table& root, const fs::path& base) {
  check_keys(root, {"mesh", "timeline", "valves", "valve", "circulation", "fluid", "coupling", "output"}, "");
  RunConfig rc;
  CoupledConfig& c = rc.coupled;

  const auto& cp = section(root, "coupling");
  check_keys(cp, {"dt", "T", "period", "depth", "ports", "walls", "pressures"}, "coupling");
  c.dt = toml::get_number(cp, "dt", c.dt);
  c.period = toml::get_number(cp, "period", c.period);
  c.T = toml::get_number(cp, "T", c.period);
  c.depth = toml::get_number(cp, "depth", c.depth);
  if (const auto* p = toml::find(cp, "ports"))
    for (const auto& [tag, v] : p->as_table())
      c.ports[tag] = parse_port(v.as_string());
  if (const auto* w = toml::find(cp, "walls"))
    for (const auto& tag : w->as_strings())
      c.walls.insert(tag);
  if (const auto* p = toml::find(cp, "pressures"))
    for (const auto& [tag, v] : p->as_table())
      c.fixed_pressure[tag] = v.as_number();

  const auto mesh = std::make_shared<const fem::Mesh>(mesh_from_toml(section(root, "mesh"), base));
  c.mesh = mesh;

  const auto& tl = section(root, "timeline");
  const std::string kind = toml::get_string(tl, "kind", "static");
  const motion::StiffeningOptions stiff{toml::get_number(tl, "alpha", 1.0), toml::get_number(tl, "floor", 1.0)};
  const double lambda = toml::get_number(tl, "lambda", 0.0);
  if (kind == "static") {
    check_keys(tl, {"kind"}, "timeline");
  } else if (kind == "ventricle") {
    check_keys(tl, {"kind", "ratio", "start", "end", "frame_dt", "lambda", "alpha", "floor"}, "timeline");
    const double start = toml::get_number(tl, "start", 0.262);
    const double end = toml::get_number(tl, "end", 0.666);
    const motion::VentricleGenerator gen(ejection_area_ratio(toml::get_number(tl, "ratio", 66.4 / 151.0), start, end),
                                         c.period);
    const auto times = ventricle_frame_times(c.period, toml::get_number(tl, "frame_dt", 0.01), start, end);
    auto built = build_motion(*mesh, gen, times, false, lambda, stiff);
    c.displacement = built.source;
    c.motion_end = built.end;
  } else if (kind == "channel_wall") {
    check_keys(tl, {"kind", "amplitude", "tag", "frames", "lambda", "alpha", "floor"}, "timeline");
    double length = 0;
    for (const auto& v : mesh->vertices())
      length = std::max(length, v.x());
    const motion::ChannelWallGenerator gen(toml::require_number(tl, "amplitude"), length, c.period,
                                           toml::get_string(tl, "tag", "y1"));
    const int n = static_cast<int>(toml::get_number(tl, "frames", 16));
    if (n < 3)
      throw ParseError("config: channel_wall needs at least 3 frames");
    std::vector<double> times;
    for (int k = 0; k < n; ++k)
      times.push_back(c.period * k / n);
    auto built = build_motion(*mesh, gen, times, true, lambda, stiff);
    c.displacement = built.source;
    c.motion_end = built.end;
  } else if (kind == "frames") {
    check_keys(tl, {"kind", "manifest", "moving_tags", "lambda", "alpha", "floor"}, "timeline");
    const auto boundary = motion::read_frames(resolve(base, toml::get_string(tl, "manifest", "")), *mesh);
    const auto* tags = toml::find(tl, "moving_tags");
    if (!tags)
      throw ParseError("config: frames timeline needs moving_tags");
    const fem::Field s = motion::stiffening_field(*mesh, stiff);
    auto timeline = std::make_shared<const motion::DisplacementTimeline>(
        motion::DisplacementTimeline::fit(motion::extend_frames(*mesh, s, boundary, tags->as_strings()), lambda));
    c.displacement = [timeline](double t) { return timeline->evaluate(t); };
    c.motion_end = timeline->periodic() ? std::numeric_limits<double>::infinity() : timeline->t_end();
  } else {
    throw ParseError(fmt::format("config: unknown timeline kind '{}'", kind));
  }

  // [valves] preset = "zygote-times" gives table defaults to valves named MV, AV, TV, PV.
  const auto& valves = section(root, "valves");
  check_keys(valves, {"preset"}, "valves");
  const std::string preset = toml::get_string(valves, "preset", "");
  if (const auto* vs = toml::find(root, "valve"))
    for (const auto& v : vs->as_array())
      c.valves.push_back(valve_from_toml(v.as_table(), base, preset));

  const auto& circ = section(root, "circulation");
  c.params = circulation::params_from_toml(circ);
  c.initial = circulation::state_from_toml(circ);
  c.seed_flows = seed_from_toml(circ);

  c.fluid = fluid_from_toml(section(root, "fluid"));

  const auto& out = section(root, "output");
  check_keys(out, {"dir", "every", "snapshot_every", "restart"}, "output");
  rc.output.dir = resolve(base, toml::get_string(out, "dir", "output"));
  c.output_every = static_cast<int>(toml::get_number(out, "every", 1));
  rc.output.snapshot_every = static_cast<int>(toml::get_number(out, "snapshot_every", 0));
  rc.output.restart_per_beat = toml::get_boolean(out, "restart", true);

  c.validate();
  return rc;
}

RunConfig load_run_config(const fs::path& path) {
  const auto root = toml::parse_file(path);
  return run_config_from_toml(root, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

StandaloneConfig standalone_config_from_toml(const toml::Table& root, const fs::path& base) {
  check_keys(root, {"circulation", "valves", "drivers", "run", "output"}, "");
  StandaloneConfig sc;

  const auto& run = section(root, "run");
  check_keys(run, {"dt", "beats", "period", "every"}, "run");
  sc.options.dt = toml::get_number(run, "dt", sc.options.dt);
  sc.options.beats = static_cast<int>(toml::get_number(run, "beats", 1));
  sc.options.output_every = static_cast<int>(toml::get_number(run, "every", 1));
  const double period = toml::get_number(run, "period", 0.8);

  const auto& valves = section(root, "valves");
  check_keys(valves, {"preset", "MV", "AV", "TV", "PV"}, "valves");
  const std::string preset = toml::get_string(valves, "preset", "zygote-times");
  if (preset != "zygote-times" && preset != "none")
    throw ParseError(fmt::format("config: unknown valve preset '{}'", preset));
  std::map<std::string, circulation::ValveTiming> timing;
  if (preset == "zygote-times")
    for (const auto& v : riis::zygote_times_preset())
      timing[v.name] = {v.open_time, v.close_time};
  for (const char* name : {"MV", "AV", "TV", "PV"}) {
    if (const auto* t = toml::find_table(valves, name)) {
      check_keys(*t, {"open", "close"}, fmt::format("valves.{}", name));
      if (!timing.count(name) && (!t->count("open") || !t->count("close")))
        throw ParseError(fmt::format("config: valve {} needs open and close", name));
      auto& vt = timing[name];
      vt.open = toml::get_number(*t, "open", vt.open);
      vt.close = toml::get_number(*t, "close", vt.close);
    }
    if (!timing.count(name))
      throw ParseError(fmt::format("config: no timing for valve {}", name));
  }

  const auto& dr = section(root, "drivers");
  check_keys(dr, {"lv_edv", "lv_esv", "rv_edv", "rv_esv", "la_min", "ra_min", "atrial_fraction"}, "drivers");
  circulation::DefaultDriverShape shape;
  shape.lv_edv = toml::get_number(dr, "lv_edv", shape.lv_edv);
  shape.lv_esv = toml::get_number(dr, "lv_esv", shape.lv_esv);
  shape.rv_edv = toml::get_number(dr, "rv_edv", shape.rv_edv);
  shape.rv_esv = toml::get_number(dr, "rv_esv", shape.rv_esv);
  shape.la_min = toml::get_number(dr, "la_min", shape.la_min);
  shape.ra_min = toml::get_number(dr, "ra_min", shape.ra_min);
  shape.atrial_fraction = toml::get_number(dr, "atrial_fraction", shape.atrial_fraction);
  sc.drivers = circulation::default_drivers(timing["MV"], timing["AV"], timing["TV"], timing["PV"], period, shape);

  const auto& circ = section(root, "circulation");
  sc.params = circulation::params_from_toml(circ);
  sc.initial = circulation::state_from_toml(circ);

  const auto& out = section(root, "output");
  check_keys(out, {"dir"}, "output");
  sc.output_dir = resolve(base, toml::get_string(out, "dir", "output"));
  return sc;
}

StandaloneConfig load_standalone_config(const fs::path& path) {
  const auto root = toml::parse_file(path);
  return standalone_config_from_toml(root, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

} // namespace cardioflow::coupling
