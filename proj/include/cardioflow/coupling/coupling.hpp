#pragma once

// Segregated explicit 3D-0D loop: valves, ALE velocity, circulation step
// with lagged 3D flows, pressures 0D -> 3D, fluid step, flows 3D -> 0D.

#include "cardioflow/circulation/circulation.hpp"
#include "cardioflow/common/error.hpp"
#include "cardioflow/common/units.hpp"
#include "cardioflow/fem/field.hpp"
#include "cardioflow/fem/mesh.hpp"
#include "cardioflow/fluid/fluid.hpp"
#include "cardioflow/riis/riis.hpp"

#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace cardioflow::coupling {

enum class Port { in_rh, out_rh, in_lh, out_lh };

/// Accepts "in-RH", "out-RH", "in-LH", "out-LH" (case and '_' insensitive).
Port parse_port(std::string_view name);
std::string port_name(Port port);

/// Full-domain displacement of the reference mesh at time t (m).
using DisplacementSource = std::function<fem::Field(double t)>;

struct CoupledConfig {
  std::shared_ptr<const fem::Mesh> mesh; // reference configuration
  DisplacementSource displacement;       // empty: static domain
  double motion_end = std::numeric_limits<double>::infinity(); // last time the source can evaluate
  std::vector<riis::ValveSpec> valves;
  circulation::CirculationParams params = circulation::CirculationParams::reference();
  circulation::CirculationState initial = circulation::CirculationState::cfd_initial();
  /// Flows used to seed the dQ/dt history; the 3D flows at t0 are zero either way.
  circulation::InterfaceFlows seed_flows;
  fluid::FluidOptions fluid;
  double dt = 1e-4;
  double T = 0.8;      // simulated time
  double period = 0.8; // heartbeat
  std::map<std::string, Port> ports;            // tag -> 0D port
  std::map<std::string, double> fixed_pressure; // tag -> mmHg, unmapped Neumann tags
  std::set<std::string> walls;                  // u = u_ALE
  double depth = 1.0; // m; turns 2D flow rates (m^2/s) into m^3/s
  int output_every = 1;

  int total_steps() const;
  int steps_per_beat() const;
  void validate() const;
};

/// Neumann datum (Pa) from a 0D pressure (mmHg).
double pressure_to_3d(double p_mmhg);
/// 0D flow (mL/s) from a 3D boundary flux (m^3/s, or m^2/s times depth in 2D).
double flow_to_0d(double q_3d, int dim, double depth);

struct TagSample {
  double p = 0; // mean pressure, mmHg
  double Q = 0; // outward flux, mL/s
};

struct CoupledRecord {
  int step = 0;
  double t = 0;
  circulation::CirculationState state; // history cleared
  circulation::InterfaceData iface;
  circulation::InterfaceFlows fed;  // flows given to the 0D step (previous 3D step)
  circulation::InterfaceFlows q3d;  // flows produced by this 3D step
  std::map<std::string, TagSample> tags;
  std::vector<char> valve_open;
  double volume = 0;  // fluid domain volume, mL
  double kinetic = 0; // J
  double cfl = 0;
};

class CouplingError : public SolverError {
public:
  CouplingError(int step, std::string phase, const std::string& what);
  int step() const { return step_; }
  const std::string& phase() const { return phase_; }

private:
  int step_;
  std::string phase_;
};

class Simulation {
public:
  explicit Simulation(CoupledConfig config);

  /// Called with the phase name as each phase of advance() starts.
  void set_phase_observer(std::function<void(std::string_view)> observer) { observer_ = std::move(observer); }

  /// One 0D step and one 3D step.
  CoupledRecord advance();
  bool done() const { return step_ >= config_.total_steps(); }

  int step() const { return step_; }
  double time() const;
  const CoupledConfig& config() const { return config_; }
  const fem::Mesh& mesh() const { return *current_; }
  const fem::Field& velocity() const { return u_; }
  const fem::Field& pressure() const { return p_; }
  const fem::Field& displacement() const { return d_; }
  const fem::Field& ale_velocity() const { return u_ale_; }
  const circulation::CirculationState& circulation_state() const { return state_; }
  const std::vector<char>& valve_open() const { return open_; }

  /// Complete state for restarting at the current step (JSON, written to a
  /// temporary file and renamed).
  void save_restart(const std::filesystem::path& path) const;
  void load_restart(const std::filesystem::path& path);

private:
  void phase(const char* name);
  void update_valves(double t);
  void update_motion(double t);

  CoupledConfig config_;
  std::function<void(std::string_view)> observer_;
  std::string current_phase_;
  int step_ = 0;
  std::shared_ptr<const fem::Mesh> current_;
  fem::Field u_, p_, d_, u_ale_;
  circulation::CirculationState state_;
  circulation::InterfaceFlows q3d_;
  std::vector<char> open_;
  riis::DistanceCache distances_;
  std::optional<riis::RiisCoefficients> riis_;
  bool riis_dirty_ = true;
};

struct RunOptions {
  std::filesystem::path output_dir; // empty: nothing written
  int snapshot_every = 0;           // steps between VTK snapshots, 0: none
  bool restart_per_beat = true;
  std::function<void(const CoupledRecord&)> on_record;
};

/// Runs to config.T. Records are kept every output_every steps. With an
/// output directory, writes records.csv, per-beat restart files and the
/// snapshot manifest as the run goes.
std::vector<CoupledRecord> run(const CoupledConfig& config, const RunOptions& options = {});
/// Same, continuing a simulation (e.g. after load_restart).
std::vector<CoupledRecord> run(Simulation& sim, const RunOptions& options = {});

/// Columns: t, 0D states, interface data, per tag p3D_<tag>/Q3D_<tag>,
/// valve_<name>, V_fluid, KE. Values printed with round-trip precision.
void write_records_csv(const std::filesystem::path& path, const CoupledConfig& config,
                       const std::vector<CoupledRecord>& records);
std::string records_csv_header(const CoupledConfig& config);
std::string record_csv_line(const CoupledRecord& record);

/// One legacy VTK file per snapshot plus snapshots.json listing
/// {t, file} entries and the fluid properties.
void write_snapshot(const std::filesystem::path& dir, const Simulation& sim);

} // namespace cardioflow::coupling
