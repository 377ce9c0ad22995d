#include "cardioflow/postproc/wss.hpp"

#include "cardioflow/common/error.hpp"
#include "cardioflow/common/parallel.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

namespace cardioflow::postproc {

using fem::Field;
using fem::Mesh;
using fem::Point;

namespace {
constexpr std::size_t kChunk = 512;

std::vector<int> tag_vertex_union(const Mesh& mesh, const std::vector<std::string>& tags) {
  if (tags.empty())
    throw InvalidArgument("no wall tags given");
  std::set<int> all;
  for (const auto& tag : tags) {
    if (!mesh.has_tag(tag))
      throw InvalidArgument(fmt::format("unknown boundary tag '{}'", tag));
    for (int v : mesh.tag_vertices(tag))
      all.insert(v);
  }
  return {all.begin(), all.end()};
}

int local_index(const std::vector<int>& sorted, int v) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), v);
  return (it != sorted.end() && *it == v) ? static_cast<int>(it - sorted.begin()) : -1;
}
} // namespace

Field WallField::to_mesh(std::size_t num_vertices) const {
  Field out(num_vertices, values.components, 0.0);
  for (std::size_t i = 0; i < vertices.size(); ++i)
    for (int c = 0; c < values.components; ++c)
      out(vertices[i], c) = values(i, c);
  return out;
}

WallField vertex_normals(const Mesh& mesh, const std::vector<std::string>& tags) {
  WallField n;
  n.vertices = tag_vertex_union(mesh, tags);
  n.values = Field(n.vertices.size(), mesh.dim(), 0.0);
  std::vector<Point> acc(n.vertices.size(), Point::Zero());
  for (const auto& tag : tags)
    for (const auto& f : mesh.facets(tag))
      for (int k = 0; k < mesh.dim(); ++k)
        acc[local_index(n.vertices, f.vertices[k])] += f.measure * f.normal;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const double len = acc[i].norm();
    if (len > 0)
      n.values.set_vec(i, acc[i] / len);
  }
  return n;
}

WallField wss_field(const Mesh& mesh, const Field& u, double mu, const std::vector<std::string>& wall_tags) {
  const WallField normals = vertex_normals(mesh, wall_tags);
  const std::size_t nw = normals.vertices.size();
  const int dim = mesh.dim();

  const auto& vc = mesh.vertex_cells();
  WallField out;
  out.vertices = normals.vertices;
  out.values = Field(nw, dim, 0.0);
  for_each_chunk(nw, kChunk, [&](std::size_t, std::size_t b, std::size_t e) {
    std::array<Point, 4> pts;
    for (std::size_t i = b; i < e; ++i) {
      const int v = out.vertices[i];
      Eigen::Matrix3d g = Eigen::Matrix3d::Zero();
      double w = 0;
      for (int c : vc[v]) {
        const auto cell = mesh.cell(c);
        for (int k = 0; k <= dim; ++k)
          pts[k] = mesh.vertex(cell[k]);
        const auto grads = fem::barycentric_gradients(dim, std::span<const Point>(pts.data(), dim + 1));
        Eigen::Matrix3d gc = Eigen::Matrix3d::Zero();
        for (int k = 0; k <= dim; ++k)
          gc += u.vec(cell[k]) * grads[k].transpose();
        g += mesh.cell_volume(c) * gc;
        w += mesh.cell_volume(c);
      }
      g /= w;
      const Eigen::Matrix3d tau = mu * (g + g.transpose());
      const Point n = normals.values.vec(i);
      const Point tn = tau * n;
      Point t = tn - tn.dot(n) * n;
      // One more projection removes the round-off left by the first.
      t -= t.dot(n) * n;
      out.values.set_vec(i, t);
    }
  });
  return out;
}

WallField tawss(const std::vector<WallField>& series, const std::vector<double>& times) {
  if (series.empty())
    throw InvalidArgument("tawss: empty series");
  if (times.size() != series.size())
    throw InvalidArgument("tawss: one time per sample required");
  for (std::size_t k = 1; k < series.size(); ++k) {
    if (series[k].vertices != series[0].vertices)
      throw InvalidArgument("tawss: samples are on different vertex sets");
    if (!(times[k] > times[k - 1]))
      throw InvalidArgument("tawss: sample times must increase");
  }
  const std::size_t nw = series[0].vertices.size();
  WallField out;
  out.vertices = series[0].vertices;
  out.values = Field(nw, 1, 0.0);
  const double T = times.back() - times.front();
  for_each_chunk(nw, kChunk, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      if (series.size() == 1) {
        out.values(i, 0) = series[0].values.vec(i).norm();
        continue;
      }
      double integral = 0;
      double prev = series[0].values.vec(i).norm();
      for (std::size_t k = 1; k < series.size(); ++k) {
        const double cur = series[k].values.vec(i).norm();
        integral += 0.5 * (prev + cur) * (times[k] - times[k - 1]);
        prev = cur;
      }
      out.values(i, 0) = integral / T;
    }
  });
  return out;
}

RegionStats region_stats(const Mesh& mesh, const WallField& scalar, const std::string& tag) {
  if (!mesh.has_tag(tag))
    throw InvalidArgument(fmt::format("unknown boundary tag '{}'", tag));
  std::map<int, double> weight;
  for (const auto& f : mesh.facets(tag))
    for (int k = 0; k < mesh.dim(); ++k)
      weight[f.vertices[k]] += f.measure / mesh.dim();
  RegionStats s;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -s.min;
  double sum = 0;
  for (const auto& [v, w] : weight) {
    const int i = local_index(scalar.vertices, v);
    if (i < 0)
      throw InvalidArgument(fmt::format("region_stats: field has no value at vertex {} of tag '{}'", v, tag));
    const double x = scalar.values(i, 0);
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
    sum += w * x;
    s.area += w;
  }
  s.mean = sum / s.area;
  return s;
}

double probe_velocity(const Mesh& mesh, const Field& u, const Sphere& sphere) {
  if (u.num_nodes() != mesh.num_vertices())
    throw InvalidArgument("probe_velocity: field does not match the mesh");
  const auto& vc = mesh.vertex_cells();
  const double share = 1.0 / mesh.vertices_per_cell();
  double sum = 0, vol = 0;
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    if ((mesh.vertex(v) - sphere.center).norm() > sphere.radius)
      continue;
    double w = 0;
    for (int c : vc[v])
      w += share * mesh.cell_volume(c);
    sum += w * u.vec(v).norm();
    vol += w;
  }
  if (vol <= 0)
    throw InvalidArgument(fmt::format("probe sphere at ({}, {}, {}) r = {} contains no mesh vertex", sphere.center[0],
                                      sphere.center[1], sphere.center[2], sphere.radius));
  return sum / vol;
}

SnapshotSet read_snapshot_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "snapshots.json";
  std::ifstream in(path);
  if (!in)
    throw ParseError(fmt::format("cannot read {}", path.string()));
  SnapshotSet s;
  try {
    const auto j = nlohmann::json::parse(in);
    s.rho = j.at("rho").get<double>();
    s.mu = j.at("mu").get<double>();
    for (const auto& e : j.at("snapshots"))
      s.entries.push_back({e.at("step").get<int>(), e.at("t").get<double>(), dir / e.at("file").get<std::string>()});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return s;
}

} // namespace cardioflow::postproc
