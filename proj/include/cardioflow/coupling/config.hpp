#pragma once

// Run configuration files: [mesh], [timeline], [[valve]], [circulation],
// [fluid], [coupling], [output]. Relative paths resolve against the
// directory of the config file.

#include "cardioflow/common/toml.hpp"
#include "cardioflow/coupling/coupling.hpp"
#include "cardioflow/motion/extension.hpp"
#include "cardioflow/motion/generators.hpp"

#include <filesystem>
#include <functional>
#include <string>

namespace cardioflow::coupling {

struct OutputSettings {
  std::filesystem::path dir = "output";
  int snapshot_every = 0;
  bool restart_per_beat = true;
};

struct RunConfig {
  CoupledConfig coupled;
  OutputSettings output;
};

RunConfig load_run_config(const std::filesystem::path& path);
RunConfig run_config_from_toml(const toml::Table& root, const std::filesystem::path& base_dir);

/// Standalone circulation runs: [circulation], [valves] (preset and
/// per-valve {open, close}), [drivers] (chamber volume shape), [run]
/// (dt, beats, period, every), [output] (dir).
struct StandaloneConfig {
  circulation::CirculationParams params = circulation::CirculationParams::reference();
  circulation::CirculationState initial = circulation::CirculationState::cfd_initial();
  circulation::ChamberDrivers drivers;
  circulation::StandaloneOptions options;
  std::filesystem::path output_dir = "output";
};

StandaloneConfig load_standalone_config(const std::filesystem::path& path);
StandaloneConfig standalone_config_from_toml(const toml::Table& root, const std::filesystem::path& base_dir);

/// [mesh] kind = "box" (extents, resolution), "ventricle" (a, b, n) or
/// "vtk" (file written with boundary tags).
fem::Mesh mesh_from_toml(const toml::Table& table, const std::filesystem::path& base_dir);

/// Area ratio of the idealized ventricle: 1 before `start`, `ratio` after
/// `end`, half-cosine in between.
std::function<double(double)> ejection_area_ratio(double ratio, double start, double end);

/// Boundary frames of a generator at the given times, extended into the
/// domain with the stiffened harmonic extension and fitted in time.
struct MotionBuild {
  DisplacementSource source;
  double end = 0; // last evaluable time (infinite when periodic)
};
MotionBuild build_motion(const fem::Mesh& reference, const motion::MotionGenerator& generator,
                         const std::vector<double>& times, bool periodic, double lambda,
                         const motion::StiffeningOptions& stiffening = {});

} // namespace cardioflow::coupling
