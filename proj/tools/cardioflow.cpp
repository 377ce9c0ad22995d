// cardioflow command line: coupled and standalone runs, postprocessing.

#include "cardioflow/common/error.hpp"
#include "cardioflow/common/parallel.hpp"
#include "cardioflow/coupling/config.hpp"
#include "cardioflow/coupling/coupling.hpp"
#include "cardioflow/fem/vtk.hpp"
#include "cardioflow/postproc/biomarkers.hpp"
#include "cardioflow/postproc/wss.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace cardioflow;

namespace {

std::pair<std::string, std::string> split_pair(const std::string& s, const char* what) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == s.size())
    throw InvalidArgument(fmt::format("{} must look like NAME=VALUE (got '{}')", what, s));
  return {s.substr(0, eq), s.substr(eq + 1)};
}

double to_number(const std::string& s, const char* what) {
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size())
    throw InvalidArgument(fmt::format("{}: '{}' is not a number", what, s));
  return x;
}

struct RunArgs {
  std::string config;
  std::string out;
  int snapshot_every = -1;
  std::string restart;
};

int cmd_run(const RunArgs& a) {
  auto rc = coupling::load_run_config(a.config);
  coupling::RunOptions opt;
  opt.output_dir = a.out.empty() ? rc.output.dir : fs::path(a.out);
  opt.snapshot_every = a.snapshot_every >= 0 ? a.snapshot_every : rc.output.snapshot_every;
  opt.restart_per_beat = rc.output.restart_per_beat;

  coupling::Simulation sim(rc.coupled);
  if (!a.restart.empty()) {
    sim.load_restart(a.restart);
    spdlog::info("resumed from {} at step {} (t = {:.4f} s)", a.restart, sim.step(), sim.time());
  }
  const int per_beat = rc.coupled.steps_per_beat();
  const int total = rc.coupled.total_steps();
  spdlog::info("{}: {} steps of {:.3g} s, {} vertices, {} thread(s)", a.config, total, rc.coupled.dt,
               rc.coupled.mesh->num_vertices(), thread_count());
  const auto start = std::chrono::steady_clock::now();
  opt.on_record = [&](const coupling::CoupledRecord& r) {
    if (r.step % per_beat == 0 || r.step == total) {
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      spdlog::info("step {}/{} t = {:.4f} s  V = {:.3f} mL  KE = {:.3e} J  CFL = {:.2f}  ({:.1f} s)", r.step, total,
                   r.t, r.volume, r.kinetic, r.cfl, wall);
    }
  };
  coupling::run(sim, opt);
  spdlog::info("records written to {}", (opt.output_dir / "records.csv").string());
  return 0;
}

int cmd_run_0d(const std::string& config, const std::string& out) {
  const auto sc = coupling::load_standalone_config(config);
  const fs::path dir = out.empty() ? sc.output_dir : fs::path(out);
  spdlog::info("{}: {} beat(s), dt = {:.3g} s", config, sc.options.beats, sc.options.dt);
  const auto series = circulation::run_standalone(sc.params, sc.initial, sc.drivers, sc.options);
  fs::create_directories(dir);
  circulation::write_csv(dir / "circulation.csv", series);
  const double drift = series.back().total_volume - series.front().total_volume;
  spdlog::info("{} samples written to {}; total volume drift {:.3e} mL", series.size(),
               (dir / "circulation.csv").string(), drift);
  return 0;
}

struct BiomarkerArgs {
  std::string series, ranges, out;
  double t0 = -1e300, t1 = 1e300;
  double last_period = 0;
  std::vector<std::string> aliases, values;
};

int cmd_biomarkers(const BiomarkerArgs& a) {
  const auto series = postproc::read_series_csv(a.series);
  const auto ranges = postproc::load_ranges(a.ranges);
  postproc::ReportOptions opt;
  opt.window = {a.t0, a.t1};
  if (a.last_period > 0) {
    const auto* t = series.find("t");
    if (!t || t->empty())
      throw InvalidArgument("--last-period needs a non-empty 't' column");
    opt.window = {t->back() - a.last_period, t->back()};
  }
  for (const auto& s : a.aliases) {
    auto [k, v] = split_pair(s, "--alias");
    opt.aliases[k] = v;
  }
  for (const auto& s : a.values) {
    auto [k, v] = split_pair(s, "--set");
    opt.values[k] = to_number(v, "--set");
  }
  const auto report = postproc::build_report(series, ranges, opt);
  for (const auto& name : report.skipped)
    spdlog::warn("{}: no value in {} (skipped)", name, a.series);
  for (const auto& r : report.rows)
    spdlog::info("{:>9} = {:>9.4g} {:<5} normalized {:+.3f} {}", r.name, r.value, r.units, r.normalized,
                 r.in_range ? "" : "(out of range)");
  postproc::write_report_csv(a.out, report);
  spdlog::info("{} biomarkers written to {}", report.rows.size(), a.out);
  return 0;
}

struct Snapshot {
  double t;
  fem::Mesh mesh;
  fem::Field velocity;
};

std::vector<Snapshot> load_snapshots(const postproc::SnapshotSet& set, double t0, double t1) {
  std::vector<Snapshot> out;
  for (const auto& e : set.entries) {
    if (e.t < t0 || e.t > t1)
      continue;
    const auto data = fem::read_vtk(e.file);
    auto it = data.point_data.find("velocity");
    if (it == data.point_data.end())
      throw ParseError(fmt::format("{}: no velocity field", e.file.string()));
    out.push_back({e.t, fem::mesh_from_vtk(data), it->second});
  }
  if (out.empty())
    throw InvalidArgument(fmt::format("no snapshots with t in [{}, {}]", t0, t1));
  return out;
}

struct WssArgs {
  std::string snapshots, out, stats;
  std::vector<std::string> tags;
  double t0 = -1e300, t1 = 1e300;
  double mu = 0;
};

int cmd_wss(const WssArgs& a) {
  const auto set = postproc::read_snapshot_manifest(a.snapshots);
  const double mu = a.mu > 0 ? a.mu : set.mu;
  const auto snaps = load_snapshots(set, a.t0, a.t1);
  std::vector<postproc::WallField> series;
  std::vector<double> times;
  for (const auto& s : snaps) {
    series.push_back(postproc::wss_field(s.mesh, s.velocity, mu, a.tags));
    times.push_back(s.t);
  }
  const auto avg = postproc::tawss(series, times);
  const auto& mesh = snaps.front().mesh;
  const fem::Field tawss = avg.to_mesh(mesh.num_vertices());
  const fem::Field last = series.back().to_mesh(mesh.num_vertices());
  fem::VtkWriteOptions vo;
  vo.include_boundary = true;
  fem::write_vtk(a.out, mesh, {{"tawss", &tawss}, {"wss_last", &last}}, vo);
  spdlog::info("TAWSS over {} snapshot(s), t = {:.4f}..{:.4f} s, mu = {:.4g} Pa s -> {}", snaps.size(), times.front(),
               times.back(), mu, a.out);

  std::string csv = "tag,min,mean,max,area\n";
  for (const auto& tag : a.tags) {
    const auto st = postproc::region_stats(mesh, avg, tag);
    spdlog::info("  {}: min {:.4g}  mean {:.4g}  max {:.4g} Pa", tag, st.min, st.mean, st.max);
    csv += fmt::format("{},{:.10g},{:.10g},{:.10g},{:.10g}\n", tag, st.min, st.mean, st.max, st.area);
  }
  if (!a.stats.empty()) {
    std::ofstream f(a.stats);
    if (!f)
      throw Error(fmt::format("cannot write {}", a.stats));
    f << csv;
  }
  return 0;
}

struct ProbeArgs {
  std::string snapshots, out;
  std::vector<std::string> probes;
  double radius = 0;
};

int cmd_probe(const ProbeArgs& a) {
  if (!(a.radius > 0))
    throw InvalidArgument("--radius must be positive");
  std::vector<std::pair<std::string, postproc::Sphere>> spheres;
  for (const auto& p : a.probes) {
    auto [name, coords] = split_pair(p, "--probe");
    postproc::Sphere s;
    s.radius = a.radius;
    std::vector<double> xs;
    std::size_t pos = 0;
    while (pos <= coords.size()) {
      const auto comma = coords.find(',', pos);
      xs.push_back(to_number(coords.substr(pos, comma - pos), "--probe"));
      if (comma == std::string::npos)
        break;
      pos = comma + 1;
    }
    if (xs.size() < 2 || xs.size() > 3)
      throw InvalidArgument(fmt::format("--probe {}: need 2 or 3 coordinates", name));
    for (std::size_t k = 0; k < xs.size(); ++k)
      s.center[k] = xs[k];
    spheres.emplace_back(name, s);
  }
  const auto set = postproc::read_snapshot_manifest(a.snapshots);
  const auto snaps = load_snapshots(set, -1e300, 1e300);
  std::string csv = "t";
  for (const auto& [name, s] : spheres)
    csv += ",v_" + name;
  csv += "\n";
  for (const auto& snap : snaps) {
    csv += fmt::format("{:.10g}", snap.t);
    for (const auto& [name, s] : spheres)
      csv += fmt::format(",{:.10g}", postproc::probe_velocity(snap.mesh, snap.velocity, s));
    csv += "\n";
  }
  std::ofstream f(a.out);
  if (!f)
    throw Error(fmt::format("cannot write {}", a.out));
  f << csv;
  spdlog::info("{} probe(s) over {} snapshot(s) -> {}", spheres.size(), snaps.size(), a.out);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"cardioflow: 3D-0D cardiac hemodynamics"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.footer("Threads: set CARDIOFLOW_THREADS (default 1).");

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Coupled 3D-0D simulation from a TOML config");
  run->add_option("config", run_args.config, "Run configuration")->required()->check(CLI::ExistingFile);
  run->add_option("--out", run_args.out, "Output directory (overrides [output] dir)");
  run->add_option("--snapshot-every", run_args.snapshot_every, "Steps between VTK snapshots");
  run->add_option("--restart", run_args.restart, "Resume from a restart file")->check(CLI::ExistingFile);

  std::string cfg0d, out0d;
  auto* run0d = app.add_subcommand("run-0d", "Standalone circulation driven by chamber volumes");
  run0d->add_option("config", cfg0d, "Standalone configuration")->required()->check(CLI::ExistingFile);
  run0d->add_option("--out", out0d, "Output directory (overrides [output] dir)");

  auto* post = app.add_subcommand("postproc", "Postprocessing of run outputs");
  post->require_subcommand(1);

  BiomarkerArgs bio;
  auto* bcmd = post->add_subcommand("biomarkers", "Biomarker report normalized against reference ranges");
  bcmd->add_option("--series", bio.series, "Time series CSV (records.csv or circulation.csv)")
      ->required()
      ->check(CLI::ExistingFile);
  bcmd->add_option("--ranges", bio.ranges, "Reference range TOML")->required()->check(CLI::ExistingFile);
  bcmd->add_option("--out", bio.out, "Report CSV")->required();
  bcmd->add_option("--t0", bio.t0, "Window start (s)");
  bcmd->add_option("--t1", bio.t1, "Window end (s)");
  bcmd->add_option("--last-period", bio.last_period, "Use the last PERIOD seconds of the series");
  bcmd->add_option("--alias", bio.aliases, "Column rename, e.g. V_LV=V_fluid");
  bcmd->add_option("--set", bio.values, "Externally computed biomarker, e.g. vmax_MV=1.03");

  WssArgs wss;
  auto* wcmd = post->add_subcommand("wss", "Time-averaged wall shear stress from VTK snapshots");
  wcmd->add_option("--snapshots", wss.snapshots, "Snapshot directory (with snapshots.json)")
      ->required()
      ->check(CLI::ExistingDirectory);
  wcmd->add_option("--wall-tag", wss.tags, "Wall boundary tag (repeatable)")->required();
  wcmd->add_option("--out", wss.out, "Output VTK")->required();
  wcmd->add_option("--t0", wss.t0, "Window start (s)");
  wcmd->add_option("--t1", wss.t1, "Window end (s)");
  wcmd->add_option("--mu", wss.mu, "Dynamic viscosity (default: from the manifest)");
  wcmd->add_option("--stats", wss.stats, "Per-tag min/mean/max CSV");

  ProbeArgs probe;
  auto* pcmd = post->add_subcommand("probe", "Mean speed in spherical control volumes per snapshot");
  pcmd->add_option("--snapshots", probe.snapshots, "Snapshot directory")->required()->check(CLI::ExistingDirectory);
  pcmd->add_option("--probe", probe.probes, "NAME=x,y[,z] (repeatable)")->required();
  pcmd->add_option("--radius", probe.radius, "Sphere radius (m)")->required();
  pcmd->add_option("--out", probe.out, "Output CSV with t, v_NAME columns")->required();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
  spdlog::set_pattern("[%H:%M:%S] %^%l%$ %v");

  try {
    if (*run)
      return cmd_run(run_args);
    if (*run0d)
      return cmd_run_0d(cfg0d, out0d);
    if (*bcmd)
      return cmd_biomarkers(bio);
    if (*wcmd)
      return cmd_wss(wss);
    if (*pcmd)
      return cmd_probe(probe);
  } catch (const coupling::CouplingError& e) {
    spdlog::error("step {} ({}): {}", e.step(), e.phase(), e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
