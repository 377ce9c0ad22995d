#include "cardioflow/fem/mesh.hpp"

#include "cardioflow/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace cardioflow::fem {

namespace {

// Local facets of a simplex: facet i omits cell vertex i.
FacetVertices local_facet(int dim, std::span<const int> cell, int omit) {
  FacetVertices f{-1, -1, -1};
  int k = 0;
  for (int i = 0; i <= dim; ++i)
    if (i != omit)
      f[k++] = cell[i];
  return f;
}

FacetVertices sorted_key(FacetVertices f, int dim) {
  std::sort(f.begin(), f.begin() + dim);
  return f;
}

struct FacetOwner {
  int cell = -1;
  int opposite = -1;
  int count = 0;
};

std::map<FacetVertices, FacetOwner> collect_facets(int dim, const std::vector<int>& cells) {
  std::map<FacetVertices, FacetOwner> facets;
  const std::size_t nv = dim + 1;
  for (std::size_t c = 0; c < cells.size() / nv; ++c) {
    std::span<const int> cell(cells.data() + c * nv, nv);
    for (int i = 0; i <= dim; ++i) {
      auto& owner = facets[sorted_key(local_facet(dim, cell, i), dim)];
      owner.cell = static_cast<int>(c);
      owner.opposite = cell[i];
      ++owner.count;
    }
  }
  return facets;
}

} // namespace

double simplex_signed_volume(int dim, std::span<const Point> pts) {
  if (dim == 2) {
    const Point a = pts[1] - pts[0];
    const Point b = pts[2] - pts[0];
    return 0.5 * (a.x() * b.y() - a.y() * b.x());
  }
  return (pts[1] - pts[0]).cross(pts[2] - pts[0]).dot(pts[3] - pts[0]) / 6.0;
}

std::array<Point, 4> barycentric_gradients(int dim, std::span<const Point> pts) {
  std::array<Point, 4> grads{};
  if (dim == 2) {
    Eigen::Matrix2d J;
    J.col(0) = (pts[1] - pts[0]).head<2>();
    J.col(1) = (pts[2] - pts[0]).head<2>();
    const Eigen::Matrix2d Jinv = J.inverse();
    for (int i = 0; i < 2; ++i)
      grads[i + 1] = Point(Jinv(i, 0), Jinv(i, 1), 0.0);
    grads[0] = -(grads[1] + grads[2]);
  } else {
    Eigen::Matrix3d J;
    for (int i = 0; i < 3; ++i)
      J.col(i) = pts[i + 1] - pts[0];
    const Eigen::Matrix3d Jinv = J.inverse();
    for (int i = 0; i < 3; ++i)
      grads[i + 1] = Jinv.row(i).transpose();
    grads[0] = -(grads[1] + grads[2] + grads[3]);
  }
  return grads;
}

Mesh Mesh::create(int dim, std::vector<Point> vertices, std::vector<int> cells,
                  const std::map<std::string, std::vector<FacetVertices>>& tagged_facets) {
  if (dim != 2 && dim != 3)
    throw InvalidArgument("mesh dimension must be 2 or 3");
  const std::size_t nv = dim + 1;
  if (cells.empty() || cells.size() % nv != 0)
    throw InvalidArgument("cell array length must be a positive multiple of dim + 1");
  for (int v : cells)
    if (v < 0 || static_cast<std::size_t>(v) >= vertices.size())
      throw InvalidArgument("cell references a vertex out of range");

  // Consistent positive orientation.
  for (std::size_t c = 0; c < cells.size() / nv; ++c) {
    std::array<Point, 4> pts;
    for (std::size_t i = 0; i < nv; ++i)
      pts[i] = vertices[cells[c * nv + i]];
    const double vol = simplex_signed_volume(dim, std::span<const Point>(pts.data(), nv));
    if (!(std::abs(vol) > 0.0))
      throw InvalidArgument("degenerate cell " + std::to_string(c));
    if (vol < 0)
      std::swap(cells[c * nv], cells[c * nv + 1]);
  }

  auto all_facets = collect_facets(dim, cells);
  std::size_t boundary_count = 0;
  for (const auto& [key, owner] : all_facets) {
    if (owner.count > 2)
      throw InvalidArgument("non-manifold facet shared by more than two cells");
    if (owner.count == 1)
      ++boundary_count;
  }

  auto topo = std::make_shared<Topology>();
  topo->dim = dim;
  topo->cells = std::move(cells);

  std::set<FacetVertices> seen;
  std::size_t tagged_count = 0;
  for (const auto& [tag, list] : tagged_facets) {
    auto& out = topo->facets[tag];
    for (const auto& f : list) {
      const auto key = sorted_key(f, dim);
      auto it = all_facets.find(key);
      if (it == all_facets.end() || it->second.count != 1)
        throw InvalidArgument("tagged facet of '" + tag + "' is not a boundary facet");
      if (!seen.insert(key).second)
        throw InvalidArgument("boundary facet carries more than one tag");
      BoundaryFacet bf;
      bf.vertices = f;
      if (dim == 2)
        bf.vertices[2] = -1;
      bf.cell = it->second.cell;
      bf.opposite = it->second.opposite;
      out.push_back(bf);
      ++tagged_count;
    }
  }
  if (tagged_count != boundary_count)
    throw InvalidArgument("tagged facets do not cover the mesh boundary (" + std::to_string(tagged_count) + " of " +
                          std::to_string(boundary_count) + ")");

  topo->vertex_cells.assign(vertices.size(), {});
  for (std::size_t c = 0; c < topo->cells.size() / nv; ++c)
    for (std::size_t i = 0; i < nv; ++i)
      topo->vertex_cells[topo->cells[c * nv + i]].push_back(static_cast<int>(c));

  Mesh mesh;
  mesh.topo_ = std::move(topo);
  mesh.vertices_ = std::move(vertices);
  mesh.compute_geometry();
  return mesh;
}

void Mesh::compute_geometry() {
  const int d = dim();
  const std::size_t nv = vertices_per_cell();
  cell_volumes_.resize(num_cells());
  for (std::size_t c = 0; c < num_cells(); ++c) {
    std::array<Point, 4> pts;
    auto cl = cell(c);
    for (std::size_t i = 0; i < nv; ++i)
      pts[i] = vertices_[cl[i]];
    const double vol = simplex_signed_volume(d, std::span<const Point>(pts.data(), nv));
    if (!(vol > 0.0))
      throw SolverError("mesh motion inverted or collapsed cell " + std::to_string(c));
    cell_volumes_[c] = vol;
  }

  facets_ = topo_->facets;
  for (auto& [tag, list] : facets_) {
    for (auto& f : list) {
      const Point& a = vertices_[f.vertices[0]];
      const Point& b = vertices_[f.vertices[1]];
      Point n;
      if (d == 2) {
        const Point t = b - a;
        n = Point(t.y(), -t.x(), 0.0);
      } else {
        n = (b - a).cross(vertices_[f.vertices[2]] - a);
      }
      const double norm = n.norm();
      f.measure = d == 2 ? norm : 0.5 * norm;
      n /= norm;
      if ((vertices_[f.opposite] - a).dot(n) > 0)
        n = -n;
      f.normal = n;
    }
  }
}

double Mesh::total_volume() const {
  double v = 0.0;
  for (double x : cell_volumes_)
    v += x;
  return v;
}

std::vector<std::string> Mesh::tags() const {
  std::vector<std::string> out;
  for (const auto& [tag, _] : facets_)
    out.push_back(tag);
  return out;
}

const std::vector<BoundaryFacet>& Mesh::facets(const std::string& tag) const {
  auto it = facets_.find(tag);
  if (it == facets_.end())
    throw InvalidArgument("unknown boundary tag '" + tag + "'");
  return it->second;
}

std::vector<int> Mesh::tag_vertices(const std::string& tag) const {
  std::set<int> out;
  for (const auto& f : facets(tag))
    for (int i = 0; i < dim(); ++i)
      out.insert(f.vertices[i]);
  return {out.begin(), out.end()};
}

std::vector<int> Mesh::boundary_vertices() const {
  std::set<int> out;
  for (const auto& [tag, list] : facets_)
    for (const auto& f : list)
      for (int i = 0; i < dim(); ++i)
        out.insert(f.vertices[i]);
  return {out.begin(), out.end()};
}

Mesh Mesh::displaced(const Field& d) const {
  if (d.num_nodes() != num_vertices())
    throw InvalidArgument("displacement field size does not match mesh");
  Mesh out;
  out.topo_ = topo_;
  out.vertices_ = vertices_;
  for (std::size_t i = 0; i < num_vertices(); ++i)
    out.vertices_[i] += d.vec(i);
  out.compute_geometry();
  return out;
}

Mesh Mesh::retagged(const std::function<std::string(const Point&, const Point&, const std::string&)>& rule) const {
  std::map<std::string, std::vector<FacetVertices>> tagged;
  for (const auto& [tag, list] : facets_) {
    for (const auto& f : list) {
      Point centroid = Point::Zero();
      for (int i = 0; i < dim(); ++i)
        centroid += vertices_[f.vertices[i]];
      centroid /= dim();
      tagged[rule(centroid, f.normal, tag)].push_back(f.vertices);
    }
  }
  return create(dim(), vertices_, topo_->cells, tagged);
}

double Mesh::cell_min_edge(std::size_t c) const {
  auto cl = cell(c);
  double h = std::numeric_limits<double>::max();
  for (std::size_t i = 0; i < cl.size(); ++i)
    for (std::size_t j = i + 1; j < cl.size(); ++j)
      h = std::min(h, (vertices_[cl[i]] - vertices_[cl[j]]).norm());
  return h;
}

double Mesh::vertex_min_edge(std::size_t v) const {
  double h = std::numeric_limits<double>::max();
  for (int c : topo_->vertex_cells[v])
    h = std::min(h, cell_min_edge(c));
  return h;
}

Mesh generate_box_mesh(int dim, const std::vector<double>& extents, const std::vector<int>& resolution) {
  if (dim != 2 && dim != 3)
    throw InvalidArgument("box mesh dimension must be 2 or 3");
  if (extents.size() != static_cast<std::size_t>(dim) || resolution.size() != static_cast<std::size_t>(dim))
    throw InvalidArgument("extents and resolution need one entry per axis");
  for (int i = 0; i < dim; ++i) {
    if (!(extents[i] > 0.0))
      throw InvalidArgument("box extents must be positive");
    if (resolution[i] < 1)
      throw InvalidArgument("box resolution must be at least 1 per axis");
  }

  const int nx = resolution[0], ny = resolution[1], nz = dim == 3 ? resolution[2] : 0;
  auto index = [&](int i, int j, int k) { return i + (nx + 1) * (j + (ny + 1) * k); };

  std::vector<Point> vertices;
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i)
        vertices.emplace_back(extents[0] * i / nx, extents[1] * j / ny, dim == 3 ? extents[2] * k / nz : 0.0);

  std::vector<int> cells;
  if (dim == 2) {
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const int v00 = index(i, j, 0), v10 = index(i + 1, j, 0);
        const int v01 = index(i, j + 1, 0), v11 = index(i + 1, j + 1, 0);
        cells.insert(cells.end(), {v00, v10, v11, v00, v11, v01});
      }
  } else {
    // Kuhn subdivision: one tetrahedron per monotone lattice path 000 -> 111.
    static constexpr int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
          for (const auto& perm : perms) {
            std::array<int, 3> corner{i, j, k};
            cells.push_back(index(corner[0], corner[1], corner[2]));
            for (int step = 0; step < 3; ++step) {
              ++corner[perm[step]];
              cells.push_back(index(corner[0], corner[1], corner[2]));
            }
          }
  }

  static const char* names[3][2] = {{"x0", "x1"}, {"y0", "y1"}, {"z0", "z1"}};
  std::map<std::string, std::vector<FacetVertices>> tagged;
  for (int a = 0; a < dim; ++a)
    for (const char* name : names[a])
      tagged[name];
  for (const auto& [key, owner] : collect_facets(dim, cells)) {
    if (owner.count != 1)
      continue;
    bool placed = false;
    for (int a = 0; a < dim && !placed; ++a) {
      for (int side = 0; side < 2 && !placed; ++side) {
        const double plane = side == 0 ? 0.0 : extents[a];
        bool on = true;
        for (int i = 0; i < dim; ++i)
          on = on && std::abs(vertices[key[i]][a] - plane) <= 1e-12 * extents[a];
        if (on) {
          tagged[names[a][side]].push_back(key);
          placed = true;
        }
      }
    }
    if (!placed)
      throw Error("box mesh boundary facet not on any box face");
  }
  return Mesh::create(dim, std::move(vertices), std::move(cells), tagged);
}

} // namespace cardioflow::fem
