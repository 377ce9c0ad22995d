#include "cardioflow/motion/timeline.hpp"

#include "cardioflow/common/error.hpp"
#include "cardioflow/common/toml.hpp"
#include "cardioflow/fem/vtk.hpp"
#include "cardioflow/motion/extension.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace cardioflow::motion {

using fem::Field;

void DisplacementFrameSet::validate() const {
  if (times.size() != frames.size())
    throw InvalidArgument("frames: times and frames differ in length");
  if (times.size() < 3)
    throw InvalidArgument("frames: at least three frames are required");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]))
      throw InvalidArgument("frames: non-finite time");
    if (i > 0 && !(times[i] > times[i - 1]))
      throw InvalidArgument(fmt::format("frames: times must be strictly increasing (frame {})", i));
    if (frames[i].components != frames[0].components || frames[i].values.size() != frames[0].values.size())
      throw InvalidArgument("frames: frames differ in size");
    if (!frames[i].is_finite())
      throw InvalidArgument("frames: non-finite displacement");
  }
  if (periodic && !(period > 0 && times.back() < times.front() + period))
    throw InvalidArgument("frames: periodic frames must lie within one period");
}

DisplacementTimeline DisplacementTimeline::fit(const DisplacementFrameSet& frames, double lambda) {
  frames.validate();
  if (!(lambda >= 0) || !std::isfinite(lambda))
    throw InvalidArgument("timeline: lambda must be >= 0");

  std::vector<double> t = frames.times;
  std::vector<const Field*> y;
  for (const auto& f : frames.frames)
    y.push_back(&f);
  std::size_t first = 0;
  if (frames.periodic) {
    t.insert(t.begin(), frames.times.back() - frames.period);
    y.insert(y.begin(), &frames.frames.back());
    t.push_back(frames.times.front() + frames.period);
    y.push_back(&frames.frames.front());
    first = 1;
  }

  const Eigen::Index n = static_cast<Eigen::Index>(t.size());
  const Eigen::Index m = static_cast<Eigen::Index>(frames.frames[0].values.size());
  Eigen::MatrixXd Y(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    Y.row(i) = Eigen::Map<const Eigen::RowVectorXd>(y[i]->values.data(), m);

  // Reinsch form: (R + lambda Q^T Q) gamma = Q^T Y, fitted values Y - lambda Q gamma.
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n - 2);
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n - 2, n - 2);
  for (Eigen::Index j = 1; j < n - 1; ++j) {
    const double h0 = t[j] - t[j - 1], h1 = t[j + 1] - t[j];
    Q(j - 1, j - 1) = 1.0 / h0;
    Q(j, j - 1) = -1.0 / h0 - 1.0 / h1;
    Q(j + 1, j - 1) = 1.0 / h1;
    R(j - 1, j - 1) = (h0 + h1) / 3.0;
    if (j < n - 2) {
      R(j - 1, j) = h1 / 6.0;
      R(j, j - 1) = h1 / 6.0;
    }
  }
  const Eigen::MatrixXd A = R + lambda * Q.transpose() * Q;
  const Eigen::MatrixXd gamma = A.ldlt().solve(Q.transpose() * Y);

  DisplacementTimeline tl;
  tl.knots_ = t;
  tl.values_ = Y - lambda * Q * gamma;
  tl.second_ = Eigen::MatrixXd::Zero(n, m);
  tl.second_.middleRows(1, n - 2) = gamma;
  tl.lambda_ = lambda;
  tl.periodic_ = frames.periodic;
  tl.period_ = frames.period;
  tl.components_ = frames.frames[0].components;
  tl.num_nodes_ = frames.frames[0].num_nodes();
  tl.t_begin_ = frames.times.front();
  tl.t_end_ = frames.periodic ? frames.times.front() + frames.period : frames.times.back();
  tl.residual_ = (Y - tl.values_).middleRows(first, frames.times.size()).squaredNorm();
  if (!tl.values_.allFinite() || !tl.second_.allFinite())
    throw SolverError("timeline: spline fit produced non-finite coefficients");
  return tl;
}

Field DisplacementTimeline::evaluate(double t) const {
  if (!std::isfinite(t))
    throw InvalidArgument("timeline: non-finite time");
  if (periodic_) {
    t = t_begin_ + std::fmod(t - t_begin_, period_);
    if (t < t_begin_)
      t += period_;
  } else {
    const double slack = 1e-12 * std::max(1.0, std::abs(t_end_ - t_begin_));
    if (t < t_begin_ - slack || t > t_end_ + slack)
      throw InvalidArgument(fmt::format("timeline: t = {} outside [{}, {}]", t, t_begin_, t_end_));
    t = std::clamp(t, t_begin_, t_end_);
  }
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  std::size_t i = it == knots_.begin() ? 0 : std::size_t(it - knots_.begin()) - 1;
  i = std::min(i, knots_.size() - 2);
  const double h = knots_[i + 1] - knots_[i];
  const double a = t - knots_[i], b = knots_[i + 1] - t;
  const double w0 = b / h, w1 = a / h;
  const double g0 = -a * b / 6.0 * (1.0 + b / h), g1 = -a * b / 6.0 * (1.0 + a / h);
  Field out(num_nodes_, components_);
  Eigen::Map<Eigen::RowVectorXd> v(out.values.data(), values_.cols());
  v = w0 * values_.row(i) + w1 * values_.row(i + 1) + g0 * second_.row(i) + g1 * second_.row(i + 1);
  return out;
}

Field DisplacementTimeline::knot_value(std::size_t i) const {
  if (i >= knots_.size())
    throw InvalidArgument("timeline: knot index out of range");
  Field out(num_nodes_, components_);
  Eigen::Map<Eigen::RowVectorXd>(out.values.data(), values_.cols()) = values_.row(i);
  return out;
}

Field ale_velocity(const DisplacementTimeline& timeline, double t_next, double dt) {
  if (!(dt > 0))
    throw InvalidArgument("ale_velocity: dt must be positive");
  const Field a = timeline.evaluate(t_next - dt);
  Field b = timeline.evaluate(t_next);
  for (std::size_t k = 0; k < b.values.size(); ++k)
    b.values[k] = (b.values[k] - a.values[k]) / dt;
  return b;
}

DisplacementFrameSet extend_frames(const fem::Mesh& mesh, const Field& s, const DisplacementFrameSet& boundary,
                                   const std::vector<std::string>& moving_tags) {
  boundary.validate();
  DisplacementFrameSet out = boundary;
  for (auto& f : out.frames)
    f = harmonic_extension(mesh, s, f, moving_tags);
  return out;
}

void write_frames(const std::filesystem::path& manifest, const fem::Mesh& mesh, const DisplacementFrameSet& frames) {
  frames.validate();
  const auto dir = manifest.parent_path();
  if (!dir.empty())
    std::filesystem::create_directories(dir);
  std::vector<std::string> files;
  for (std::size_t i = 0; i < frames.frames.size(); ++i) {
    files.push_back(fmt::format("frame_{:04d}.vtk", i));
    fem::write_vtk(dir / files.back(), mesh, {{"displacement", &frames.frames[i]}});
  }
  std::ofstream f(manifest);
  if (!f)
    throw Error(fmt::format("cannot write {}", manifest.string()));
  f << "times = [";
  for (std::size_t i = 0; i < frames.times.size(); ++i)
    f << (i ? ", " : "") << fmt::format("{:.17g}", frames.times[i]);
  f << "]\nfiles = [";
  for (std::size_t i = 0; i < files.size(); ++i)
    f << (i ? ", " : "") << '"' << files[i] << '"';
  f << "]\nperiodic = " << (frames.periodic ? "true" : "false") << "\n";
  f << fmt::format("period = {:.17g}\n", frames.period);
}

DisplacementFrameSet read_frames(const std::filesystem::path& manifest, const fem::Mesh& mesh) {
  const auto root = toml::parse_file(manifest);
  const auto* times = toml::find(root, "times");
  const auto* files = toml::find(root, "files");
  if (!times || !files)
    throw ParseError(fmt::format("{}: manifest needs 'times' and 'files'", manifest.string()));
  DisplacementFrameSet out;
  out.times = times->as_numbers();
  const auto names = files->as_strings();
  if (names.size() != out.times.size())
    throw ParseError(fmt::format("{}: 'times' and 'files' differ in length", manifest.string()));
  out.periodic = toml::get_boolean(root, "periodic", false);
  out.period = toml::get_number(root, "period", 0.0);
  for (const auto& name : names) {
    const auto data = fem::read_vtk(manifest.parent_path() / name);
    auto it = data.point_data.find("displacement");
    if (it == data.point_data.end())
      throw ParseError(fmt::format("{}: no 'displacement' point data", name));
    if (it->second.num_nodes() != mesh.num_vertices())
      throw ParseError(fmt::format("{}: frame has {} nodes, mesh has {}", name, it->second.num_nodes(),
                                   mesh.num_vertices()));
    Field f(mesh.num_vertices(), mesh.dim());
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
      for (int c = 0; c < mesh.dim() && c < it->second.components; ++c)
        f(v, c) = it->second(v, c);
    out.frames.push_back(std::move(f));
  }
  out.validate();
  return out;
}

} // namespace cardioflow::motion
