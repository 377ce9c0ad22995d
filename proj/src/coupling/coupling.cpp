#include "cardioflow/coupling/coupling.hpp"

#include "cardioflow/fem/assembly.hpp"
#include "cardioflow/fem/vtk.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

namespace cardioflow::coupling {

namespace fs = std::filesystem;
using nlohmann::json;

Port parse_port(std::string_view name) {
  std::string s;
  for (char c : name)
    s += c == '_' ? '-' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "in-rh")
    return Port::in_rh;
  if (s == "out-rh")
    return Port::out_rh;
  if (s == "in-lh")
    return Port::in_lh;
  if (s == "out-lh")
    return Port::out_lh;
  throw InvalidArgument(fmt::format("coupling: unknown port '{}'", name));
}

std::string port_name(Port port) {
  switch (port) {
  case Port::in_rh:
    return "in-RH";
  case Port::out_rh:
    return "out-RH";
  case Port::in_lh:
    return "in-LH";
  case Port::out_lh:
    return "out-LH";
  }
  return "?";
}

double pressure_to_3d(double p_mmhg) { return units::mmhg_to_pa(p_mmhg); }

double flow_to_0d(double q_3d, int dim, double depth) {
  return units::m3s_to_mls(dim == 2 ? q_3d * depth : q_3d);
}

namespace {

int whole_ratio(double a, double b, const char* what) {
  const double r = a / b;
  const double n = std::round(r);
  if (n < 1 || std::abs(r - n) > 1e-9 * std::max(1.0, n))
    throw InvalidArgument(fmt::format("coupling: {} must be a whole multiple of dt", what));
  return static_cast<int>(n);
}

double port_pressure(const circulation::InterfaceData& d, Port port) {
  switch (port) {
  case Port::in_rh:
    return d.p_in_rh;
  case Port::out_rh:
    return d.p_out_rh;
  case Port::in_lh:
    return d.p_in_lh;
  case Port::out_lh:
    return d.p_out_lh;
  }
  return 0;
}

// Outward 3D flux -> forward-positive 0D flow of the branch behind the port.
void add_port_flow(circulation::InterfaceFlows& q, Port port, double outward) {
  switch (port) {
  case Port::in_rh:
    q.Q_VEN_SYS -= outward;
    break;
  case Port::out_rh:
    q.Q_PV += outward;
    break;
  case Port::in_lh:
    q.Q_VEN_PUL -= outward;
    break;
  case Port::out_lh:
    q.Q_AV += outward;
    break;
  }
}

json flows_json(const circulation::InterfaceFlows& q) {
  return {{"Q_AV", q.Q_AV}, {"Q_PV", q.Q_PV}, {"Q_VEN_SYS", q.Q_VEN_SYS}, {"Q_VEN_PUL", q.Q_VEN_PUL}};
}

circulation::InterfaceFlows flows_from_json(const json& j) {
  circulation::InterfaceFlows q;
  q.Q_AV = j.at("Q_AV").get<double>();
  q.Q_PV = j.at("Q_PV").get<double>();
  q.Q_VEN_SYS = j.at("Q_VEN_SYS").get<double>();
  q.Q_VEN_PUL = j.at("Q_VEN_PUL").get<double>();
  return q;
}

void write_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw Error(fmt::format("cannot write {}", tmp.string()));
    out << text;
    if (!out)
      throw Error(fmt::format("cannot write {}", tmp.string()));
  }
  fs::rename(tmp, path);
}

} // namespace

int CoupledConfig::total_steps() const { return whole_ratio(T, dt, "T"); }

int CoupledConfig::steps_per_beat() const { return whole_ratio(period, dt, "the heartbeat period"); }

void CoupledConfig::validate() const {
  if (!mesh)
    throw InvalidArgument("coupling: no mesh");
  if (!(dt > 0) || !(T > 0) || !(period > 0))
    throw InvalidArgument("coupling: dt, T and period must be positive");
  if (!(depth > 0))
    throw InvalidArgument("coupling: depth must be positive");
  if (output_every < 1)
    throw InvalidArgument("coupling: output stride must be at least 1");
  if (total_steps() % output_every != 0)
    throw InvalidArgument("coupling: T must be a multiple of the output stride");
  steps_per_beat();
  if (displacement && T > motion_end + 1e-12)
    throw InvalidArgument(fmt::format("coupling: wall motion ends at {} s before T = {} s", motion_end, T));
  params.validate();
  initial.validate();
  fluid.props.validate();
  std::set<std::string> names;
  for (const auto& v : valves) {
    v.validate(period);
    if (!names.insert(v.name).second)
      throw InvalidArgument(fmt::format("coupling: duplicate valve '{}'", v.name));
  }
  std::map<std::string, int> count;
  for (const auto& [tag, port] : ports)
    ++count[tag];
  for (const auto& [tag, p] : fixed_pressure) {
    if (!std::isfinite(p))
      throw InvalidArgument(fmt::format("coupling: pressure on '{}' is not finite", tag));
    ++count[tag];
  }
  for (const auto& tag : walls)
    ++count[tag];
  for (const auto& [tag, n] : count) {
    if (!mesh->has_tag(tag))
      throw InvalidArgument(fmt::format("coupling: unknown boundary tag '{}'", tag));
    if (n > 1)
      throw InvalidArgument(fmt::format("coupling: tag '{}' has more than one role", tag));
  }
  for (const auto& tag : mesh->tags())
    if (!count.count(tag))
      throw InvalidArgument(fmt::format("coupling: tag '{}' is neither a port, a fixed pressure nor a wall", tag));
}

CouplingError::CouplingError(int step, std::string phase, const std::string& what)
    : SolverError(fmt::format("step {} ({}): {}", step, phase, what)), step_(step), phase_(std::move(phase)) {}

Simulation::Simulation(CoupledConfig config) : config_(std::move(config)), distances_((config_.validate(), *config_.mesh)) {
  const auto& mesh = *config_.mesh;
  const int dim = mesh.dim();
  u_ = fem::Field(mesh.num_vertices(), dim);
  p_ = fem::Field(mesh.num_vertices(), 1);
  d_ = config_.displacement ? config_.displacement(config_.initial.t) : fem::Field(mesh.num_vertices(), dim);
  if (d_.num_nodes() != mesh.num_vertices() || d_.components != dim)
    throw InvalidArgument("coupling: displacement source does not match the mesh");
  current_ = config_.displacement ? std::make_shared<const fem::Mesh>(mesh.displaced(d_)) : config_.mesh;
  u_ale_ = fem::Field(mesh.num_vertices(), dim);
  state_ = config_.initial;
  state_.seed_history(config_.seed_flows, config_.dt);
  for (const auto& v : config_.valves)
    open_.push_back(riis::valve_open_at(v, state_.t, config_.period) ? 1 : 0);
}

double Simulation::time() const { return config_.initial.t + step_ * config_.dt; }

void Simulation::phase(const char* name) {
  current_phase_ = name;
  if (observer_)
    observer_(name);
}

void Simulation::update_valves(double t) {
  for (std::size_t k = 0; k < config_.valves.size(); ++k) {
    const char now = riis::valve_open_at(config_.valves[k], t, config_.period) ? 1 : 0;
    if (now != open_[k]) {
      open_[k] = now;
      riis_dirty_ = true;
    }
  }
}

void Simulation::update_motion(double t) {
  if (!config_.displacement) {
    std::fill(u_ale_.values.begin(), u_ale_.values.end(), 0.0);
    return;
  }
  fem::Field next = config_.displacement(t);
  if (next.values.size() != d_.values.size())
    throw InvalidArgument("coupling: displacement source changed size");
  for (std::size_t k = 0; k < next.values.size(); ++k)
    u_ale_.values[k] = (next.values[k] - d_.values[k]) / config_.dt;
  d_ = std::move(next);
  current_ = std::make_shared<const fem::Mesh>(config_.mesh->displaced(d_));
  riis_dirty_ = true;
}

CoupledRecord Simulation::advance() {
  if (done())
    throw InvalidArgument("coupling: simulation already reached T");
  const int n = step_;
  const double t_next = config_.initial.t + (n + 1) * config_.dt;
  const fem::Mesh& ref = *config_.mesh;
  const int dim = ref.dim();
  CoupledRecord rec;
  try {
    phase("valves");
    update_valves(t_next);

    phase("ale");
    update_motion(t_next);

    phase("circulation");
    rec.fed = q3d_;
    state_ = circulation::step_imex(state_, config_.params, q3d_, config_.dt);

    phase("interface_0d_to_3d");
    rec.iface = circulation::interface_pressures(state_, config_.params);
    fluid::FluidStepInputs in;
    in.mesh = current_.get();
    in.u_n = u_;
    in.u_ale = u_ale_;
    in.dt = config_.dt;
    in.bc.walls = config_.walls;
    for (const auto& [tag, port] : config_.ports)
      in.bc.neumann[tag] = pressure_to_3d(port_pressure(rec.iface, port));
    for (const auto& [tag, p] : config_.fixed_pressure)
      in.bc.neumann[tag] = pressure_to_3d(p);

    phase("fluid");
    std::vector<riis::ActiveValve> active;
    for (std::size_t k = 0; k < config_.valves.size(); ++k) {
      const auto* phi = distances_.distances(config_.valves[k], open_[k] != 0);
      if (phi)
        active.push_back({&config_.valves[k], phi});
    }
    fem::Field target;
    if (!active.empty()) {
      if (riis_dirty_ || !riis_)
        riis_ = riis::riis_coefficients(*current_, active);
      riis_dirty_ = false;
      target = riis::riis_target_load(*current_, active, *riis_, u_ale_);
      in.riis = &*riis_;
      in.riis_target = &target;
    }
    const auto res = fluid::fluid_step(in, config_.fluid);
    u_ = res.u;
    p_ = res.p;
    rec.cfl = res.cfl;

    phase("interface_3d_to_0d");
    circulation::InterfaceFlows q;
    for (const auto& tag : current_->tags()) {
      TagSample s;
      const double flux = fem::boundary_integral_flux(*current_, u_, u_ale_, tag);
      s.Q = flow_to_0d(flux, dim, config_.depth);
      s.p = units::pa_to_mmhg(fem::boundary_mean_pressure(*current_, p_, tag));
      rec.tags[tag] = s;
      const auto it = config_.ports.find(tag);
      if (it != config_.ports.end())
        add_port_flow(q, it->second, s.Q);
    }
    // Unmapped ports keep zero flow.
    q3d_ = q;
  } catch (const CouplingError&) {
    throw;
  } catch (const std::exception& e) {
    throw CouplingError(n + 1, current_phase_, e.what());
  }

  step_ = n + 1;
  rec.step = step_;
  rec.t = t_next;
  rec.state = state_;
  rec.state.history.clear();
  rec.q3d = q3d_;
  rec.valve_open = open_;
  const double vol = current_->total_volume();
  rec.volume = units::m3s_to_mls(dim == 2 ? vol * config_.depth : vol);
  rec.kinetic = fluid::energy_report(*current_, u_, p_, config_.fluid.props).kinetic * (dim == 2 ? config_.depth : 1.0);
  return rec;
}

void Simulation::save_restart(const fs::path& path) const {
  json j;
  j["step"] = step_;
  j["t"] = time();
  j["num_vertices"] = config_.mesh->num_vertices();
  j["dim"] = config_.mesh->dim();
  json st;
  st["t"] = state_.t;
  st["p_AR_SYS"] = state_.p_ar_sys;
  st["p_VEN_SYS"] = state_.p_ven_sys;
  st["p_AR_PUL"] = state_.p_ar_pul;
  st["p_VEN_PUL"] = state_.p_ven_pul;
  st["Q_AR_SYS"] = state_.Q_ar_sys;
  st["Q_AR_PUL"] = state_.Q_ar_pul;
  json hist = json::array();
  for (const auto& h : state_.history)
    hist.push_back({{"t", h.t}, {"q", flows_json(h.q)}});
  st["history"] = hist;
  j["circulation"] = st;
  j["q3d"] = flows_json(q3d_);
  j["u"] = u_.values;
  j["p"] = p_.values;
  j["d"] = d_.values;
  j["valve_open"] = std::vector<int>(open_.begin(), open_.end());
  write_atomic(path, j.dump());
}

void Simulation::load_restart(const fs::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ParseError(fmt::format("cannot open restart file {}", path.string()));
  json j;
  try {
    j = json::parse(in);
    if (j.at("num_vertices").get<std::size_t>() != config_.mesh->num_vertices() ||
        j.at("dim").get<int>() != config_.mesh->dim())
      throw ParseError("restart file belongs to a different mesh");
    const int step = j.at("step").get<int>();
    if (step < 0 || step > config_.total_steps())
      throw ParseError("restart step outside the configured run");
    const auto& st = j.at("circulation");
    circulation::CirculationState s;
    s.t = st.at("t").get<double>();
    s.p_ar_sys = st.at("p_AR_SYS").get<double>();
    s.p_ven_sys = st.at("p_VEN_SYS").get<double>();
    s.p_ar_pul = st.at("p_AR_PUL").get<double>();
    s.p_ven_pul = st.at("p_VEN_PUL").get<double>();
    s.Q_ar_sys = st.at("Q_AR_SYS").get<double>();
    s.Q_ar_pul = st.at("Q_AR_PUL").get<double>();
    for (const auto& h : st.at("history"))
      s.history.push_back({h.at("t").get<double>(), flows_from_json(h.at("q"))});
    s.validate();
    auto u = j.at("u").get<std::vector<double>>();
    auto p = j.at("p").get<std::vector<double>>();
    auto d = j.at("d").get<std::vector<double>>();
    auto open = j.at("valve_open").get<std::vector<int>>();
    if (u.size() != u_.values.size() || p.size() != p_.values.size() || d.size() != d_.values.size() ||
        open.size() != open_.size())
      throw ParseError("restart field sizes do not match the configuration");
    step_ = step;
    state_ = s;
    q3d_ = flows_from_json(j.at("q3d"));
    u_.values = std::move(u);
    p_.values = std::move(p);
    d_.values = std::move(d);
    open_.assign(open.begin(), open.end());
    current_ = config_.displacement ? std::make_shared<const fem::Mesh>(config_.mesh->displaced(d_)) : config_.mesh;
    riis_dirty_ = true;
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string records_csv_header(const CoupledConfig& config) {
  std::string h = "t,p_AR_SYS,p_VEN_SYS,p_AR_PUL,p_VEN_PUL,Q_AR_SYS,Q_AR_PUL,"
                  "p_in_RH,p_out_RH,p_in_LH,p_out_LH,Q_in_RH,Q_out_RH,Q_in_LH,Q_out_LH";
  for (const auto& tag : config.mesh->tags())
    h += fmt::format(",p3D_{0},Q3D_{0}", tag);
  for (const auto& v : config.valves)
    h += ",valve_" + v.name;
  h += ",V_fluid,KE";
  return h;
}

std::string record_csv_line(const CoupledRecord& r) {
  const auto& s = r.state;
  const auto& d = r.iface;
  std::string line = fmt::format("{:.17g}", r.t);
  for (double x : {s.p_ar_sys, s.p_ven_sys, s.p_ar_pul, s.p_ven_pul, s.Q_ar_sys, s.Q_ar_pul, d.p_in_rh, d.p_out_rh,
                   d.p_in_lh, d.p_out_lh, d.Q_in_rh, d.Q_out_rh, d.Q_in_lh, d.Q_out_lh})
    line += fmt::format(",{:.17g}", x);
  for (const auto& [tag, ts] : r.tags)
    line += fmt::format(",{:.17g},{:.17g}", ts.p, ts.Q);
  for (char o : r.valve_open)
    line += o ? ",1" : ",0";
  line += fmt::format(",{:.17g},{:.17g}", r.volume, r.kinetic);
  return line;
}

void write_records_csv(const fs::path& path, const CoupledConfig& config, const std::vector<CoupledRecord>& records) {
  std::string text = records_csv_header(config) + "\n";
  for (const auto& r : records)
    text += record_csv_line(r) + "\n";
  write_atomic(path, text);
}

void write_snapshot(const fs::path& dir, const Simulation& sim) {
  fs::create_directories(dir);
  const std::string name = fmt::format("snapshot_{:07d}.vtk", sim.step());
  fem::VtkWriteOptions opt;
  opt.include_boundary = true;
  fem::write_vtk(dir / name, sim.mesh(),
                 {{"velocity", &sim.velocity()},
                  {"pressure", &sim.pressure()},
                  {"displacement", &sim.displacement()},
                  {"ale_velocity", &sim.ale_velocity()}},
                 opt);
  const fs::path manifest = dir / "snapshots.json";
  json j;
  if (fs::exists(manifest)) {
    std::ifstream in(manifest);
    j = json::parse(in);
  } else {
    j["rho"] = sim.config().fluid.props.rho;
    j["mu"] = sim.config().fluid.props.mu;
    j["snapshots"] = json::array();
  }
  auto& list = j["snapshots"];
  // A restarted run may revisit times already listed.
  json kept = json::array();
  for (const auto& e : list)
    if (e.at("step").get<int>() < sim.step())
      kept.push_back(e);
  kept.push_back({{"step", sim.step()}, {"t", sim.time()}, {"file", name}});
  list = kept;
  write_atomic(manifest, j.dump(2));
}

std::vector<CoupledRecord> run(const CoupledConfig& config, const RunOptions& options) {
  Simulation sim(config);
  return run(sim, options);
}

std::vector<CoupledRecord> run(Simulation& sim, const RunOptions& options) {
  const auto& config = sim.config();
  const bool write = !options.output_dir.empty();
  if (write) {
    fs::create_directories(options.output_dir);
    if (options.snapshot_every > 0 && sim.step() == 0)
      write_snapshot(options.output_dir / "snapshots", sim);
  }
  const int per_beat = config.steps_per_beat();
  std::vector<CoupledRecord> records;
  std::string csv = records_csv_header(config) + "\n";
  while (!sim.done()) {
    CoupledRecord rec = sim.advance();
    if (options.on_record)
      options.on_record(rec);
    if (rec.step % config.output_every == 0) {
      if (write)
        csv += record_csv_line(rec) + "\n";
      records.push_back(std::move(rec));
    }
    if (!write)
      continue;
    if (options.snapshot_every > 0 && sim.step() % options.snapshot_every == 0)
      write_snapshot(options.output_dir / "snapshots", sim);
    if (options.restart_per_beat && sim.step() % per_beat == 0) {
      sim.save_restart(options.output_dir / fmt::format("restart_beat_{:03d}.json", sim.step() / per_beat));
      write_atomic(options.output_dir / "records.csv", csv);
    }
  }
  if (write)
    write_atomic(options.output_dir / "records.csv", csv);
  return records;
}

} // namespace cardioflow::coupling
