#include "cardioflow/fem/vtk.hpp"

#include "cardioflow/common/error.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

namespace cardioflow::fem {

namespace {

constexpr int vtk_line = 3;
constexpr int vtk_triangle = 5;
constexpr int vtk_tetra = 10;

std::string tag_title(const std::string& title, const std::vector<std::string>& tags) {
  std::string out = title + " tags=";
  for (std::size_t i = 0; i < tags.size(); ++i)
    out += (i ? "," : "") + tags[i];
  return out;
}

} // namespace

void write_vtk(const std::filesystem::path& path, const Mesh& mesh, const std::vector<NamedField>& fields,
               const VtkWriteOptions& options) {
  std::ofstream out(path);
  if (!out)
    throw Error("cannot write " + path.string());

  const int dim = mesh.dim();
  const auto tags = mesh.tags();
  std::size_t n_facets = 0;
  if (options.include_boundary)
    for (const auto& tag : tags)
      n_facets += mesh.facets(tag).size();

  out << "# vtk DataFile Version 3.0\n";
  out << (options.include_boundary ? tag_title(options.title, tags) : options.title) << "\n";
  out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& p : mesh.vertices())
    out << fmt::format("{:.17g} {:.17g} {:.17g}\n", p.x(), p.y(), p.z());

  const std::size_t n_cells = mesh.num_cells() + n_facets;
  const std::size_t list_size = mesh.num_cells() * (dim + 2) + n_facets * (dim + 1);
  out << "CELLS " << n_cells << " " << list_size << "\n";
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    out << dim + 1;
    for (int v : mesh.cell(c))
      out << " " << v;
    out << "\n";
  }
  if (options.include_boundary)
    for (const auto& tag : tags)
      for (const auto& f : mesh.facets(tag)) {
        out << dim;
        for (int i = 0; i < dim; ++i)
          out << " " << f.vertices[i];
        out << "\n";
      }
  out << "CELL_TYPES " << n_cells << "\n";
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    out << (dim == 2 ? vtk_triangle : vtk_tetra) << "\n";
  for (std::size_t f = 0; f < n_facets; ++f)
    out << (dim == 2 ? vtk_line : vtk_triangle) << "\n";

  if (options.include_boundary) {
    out << "CELL_DATA " << n_cells << "\nSCALARS boundary_tag int 1\nLOOKUP_TABLE default\n";
    for (std::size_t c = 0; c < mesh.num_cells(); ++c)
      out << "-1\n";
    for (std::size_t t = 0; t < tags.size(); ++t)
      for (std::size_t k = 0; k < mesh.facets(tags[t]).size(); ++k)
        out << t << "\n";
  }

  if (!fields.empty())
    out << "POINT_DATA " << mesh.num_vertices() << "\n";
  for (const auto& [name, field] : fields) {
    if (field->num_nodes() != mesh.num_vertices())
      throw InvalidArgument("field '" + name + "' does not match the mesh");
    if (field->components == 1) {
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : field->values)
        out << fmt::format("{:.17g}\n", v);
    } else {
      out << "VECTORS " << name << " double\n";
      for (std::size_t i = 0; i < field->num_nodes(); ++i) {
        const Point v = field->vec(i);
        out << fmt::format("{:.17g} {:.17g} {:.17g}\n", v.x(), v.y(), v.z());
      }
    }
  }
  if (!out)
    throw Error("failed writing " + path.string());
}

VtkData read_vtk(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ParseError("cannot open " + path.string());
  VtkData data;
  std::string line;
  std::getline(in, line);
  if (line.rfind("# vtk DataFile", 0) != 0)
    throw ParseError(path.string() + ": not a legacy VTK file");
  std::getline(in, data.title);
  std::string word;
  in >> word;
  if (word != "ASCII")
    throw ParseError(path.string() + ": only ASCII VTK is supported");

  enum class Section { None, Point, Cell } section = Section::None;
  std::size_t n_points = 0, n_cells = 0;
  while (in >> word) {
    if (word == "DATASET") {
      in >> word;
      if (word != "UNSTRUCTURED_GRID")
        throw ParseError(path.string() + ": expected UNSTRUCTURED_GRID");
    } else if (word == "POINTS") {
      in >> n_points >> word;
      data.points.resize(n_points);
      for (auto& p : data.points)
        in >> p.x() >> p.y() >> p.z();
    } else if (word == "CELLS") {
      std::size_t size = 0;
      in >> n_cells >> size;
      data.cells.resize(n_cells);
      for (auto& c : data.cells) {
        int k = 0;
        in >> k;
        c.resize(k);
        for (auto& v : c)
          in >> v;
      }
    } else if (word == "CELL_TYPES") {
      std::size_t n = 0;
      in >> n;
      data.cell_types.resize(n);
      for (auto& t : data.cell_types)
        in >> t;
    } else if (word == "POINT_DATA") {
      in >> word;
      section = Section::Point;
    } else if (word == "CELL_DATA") {
      in >> word;
      section = Section::Cell;
    } else if (word == "SCALARS") {
      std::string name, type;
      int comps = 1;
      in >> name >> type;
      std::getline(in, line);
      std::istringstream rest(line);
      if (!(rest >> comps))
        comps = 1;
      in >> word;
      if (word == "LOOKUP_TABLE")
        in >> word;
      const std::size_t n = section == Section::Point ? n_points : n_cells;
      if (section == Section::Point) {
        Field f(n, comps);
        for (auto& v : f.values)
          in >> v;
        data.point_data[name] = std::move(f);
      } else {
        std::vector<double> vals(n * comps);
        for (auto& v : vals)
          in >> v;
        data.cell_data[name] = std::move(vals);
      }
    } else if (word == "VECTORS") {
      std::string name, type;
      in >> name >> type;
      Field f(n_points, 3);
      for (auto& v : f.values)
        in >> v;
      data.point_data[name] = std::move(f);
    } else {
      throw ParseError(path.string() + ": unsupported VTK keyword '" + word + "'");
    }
    if (!in)
      throw ParseError(path.string() + ": truncated VTK file");
  }
  return data;
}

Mesh mesh_from_vtk(const VtkData& data) {
  int dim = 2;
  for (int t : data.cell_types)
    if (t == vtk_tetra)
      dim = 3;
  const int volume_type = dim == 2 ? vtk_triangle : vtk_tetra;
  const int facet_type = dim == 2 ? vtk_line : vtk_triangle;

  std::vector<std::string> tags;
  const auto pos = data.title.find("tags=");
  if (pos != std::string::npos) {
    std::istringstream ss(data.title.substr(pos + 5));
    std::string tag;
    while (std::getline(ss, tag, ','))
      tags.push_back(tag);
  }
  auto tag_it = data.cell_data.find("boundary_tag");
  if (tags.empty() || tag_it == data.cell_data.end())
    throw ParseError("VTK file carries no boundary tags");

  std::vector<int> cells;
  std::map<std::string, std::vector<FacetVertices>> tagged;
  for (const auto& t : tags)
    tagged[t];
  for (std::size_t c = 0; c < data.cells.size(); ++c) {
    const int type = data.cell_types.at(c);
    const int tag_index = static_cast<int>(tag_it->second.at(c));
    if (tag_index < 0 && type == volume_type) {
      cells.insert(cells.end(), data.cells[c].begin(), data.cells[c].end());
    } else if (tag_index >= 0 && type == facet_type) {
      FacetVertices f{-1, -1, -1};
      for (int i = 0; i < dim; ++i)
        f[i] = data.cells[c][i];
      tagged.at(tags.at(tag_index)).push_back(f);
    } else {
      throw ParseError("unexpected cell type in tagged VTK mesh");
    }
  }
  return Mesh::create(dim, data.points, std::move(cells), tagged);
}

} // namespace cardioflow::fem
