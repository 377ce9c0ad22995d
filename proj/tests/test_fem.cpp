#include <doctest.h>

#include "cardioflow/common/error.hpp"
#include "cardioflow/fem/assembly.hpp"
#include "cardioflow/fem/quadrature.hpp"
#include "cardioflow/fem/vtk.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>

using namespace cardioflow;
using namespace cardioflow::fem;

namespace {

Field nodal(const Mesh& mesh, int comps, const std::function<Point(const Point&)>& f) {
  Field out(mesh.num_vertices(), comps);
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i)
    out.set_vec(i, f(mesh.vertex(i)));
  return out;
}

Field scalar(const Mesh& mesh, const std::function<double(const Point&)>& f) {
  Field out(mesh.num_vertices(), 1);
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i)
    out.values[i] = f(mesh.vertex(i));
  return out;
}

} // namespace

TEST_CASE("box mesh: minimal 2D and 3D counts") {
  const Mesh tri = generate_box_mesh(2, {1, 1}, {1, 1});
  CHECK(tri.num_cells() == 2);
  CHECK(tri.num_vertices() == 4);

  const Mesh tet = generate_box_mesh(3, {1, 1, 1}, {1, 1, 1});
  CHECK(tet.num_vertices() == 8);
  // Oracle: one tetrahedron per monotone lattice path from 000 to 111, i.e. 3! paths,
  // each of volume 1/6.
  std::vector<int> axes{0, 1, 2};
  int paths = 0;
  do {
    ++paths;
  } while (std::next_permutation(axes.begin(), axes.end()));
  CHECK(tet.num_cells() == static_cast<std::size_t>(paths));
  for (std::size_t c = 0; c < tet.num_cells(); ++c)
    CHECK(tet.cell_volume(c) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  CHECK(tet.tags() == std::vector<std::string>{"x0", "x1", "y0", "y1", "z0", "z1"});
}

TEST_CASE("box mesh: cell measures sum to the box measure") {
  const Mesh m2 = generate_box_mesh(2, {2, 1}, {4, 2});
  CHECK(std::abs(m2.total_volume() - 2.0) <= 1e-12 * 2.0);
  const Mesh m3 = generate_box_mesh(3, {0.3, 0.2, 0.5}, {3, 4, 5});
  CHECK(std::abs(m3.total_volume() - 0.03) <= 1e-12 * 0.03);
  for (std::size_t c = 0; c < m3.num_cells(); ++c)
    CHECK(m3.cell_volume(c) > 0);

  // Tagged facets partition the boundary: total area = box surface.
  double area = 0;
  for (const auto& tag : m3.tags())
    area += boundary_measure(m3, tag);
  CHECK(area == doctest::Approx(2 * (0.3 * 0.2 + 0.3 * 0.5 + 0.2 * 0.5)).epsilon(1e-12));
}

TEST_CASE("box mesh: invalid arguments") {
  CHECK_THROWS_AS(generate_box_mesh(2, {0, 1}, {1, 1}), InvalidArgument);
  CHECK_THROWS_AS(generate_box_mesh(2, {-1, 1}, {1, 1}), InvalidArgument);
  CHECK_THROWS_AS(generate_box_mesh(2, {1, 1}, {0, 1}), InvalidArgument);
  CHECK_THROWS_AS(generate_box_mesh(4, {1, 1, 1, 1}, {1, 1, 1, 1}), InvalidArgument);
}

TEST_CASE("mesh: create flips orientation and validates tags") {
  std::vector<Point> v{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  // Clockwise input gets reoriented.
  std::map<std::string, std::vector<FacetVertices>> tags{{"a", {{0, 1, -1}, {1, 2, -1}}}, {"b", {{2, 0, -1}}}};
  const Mesh m = Mesh::create(2, v, {0, 2, 1}, tags);
  CHECK(m.cell_volume(0) == doctest::Approx(0.5));
  // Outward normal of facet (0,1) on y = 0 points to -y.
  CHECK(m.facets("a")[0].normal.y() == doctest::Approx(-1.0));

  std::map<std::string, std::vector<FacetVertices>> partial{{"a", {{0, 1, -1}}}};
  CHECK_THROWS_AS(Mesh::create(2, v, {0, 1, 2}, partial), InvalidArgument);
  std::map<std::string, std::vector<FacetVertices>> twice{{"a", {{0, 1, -1}, {1, 2, -1}}}, {"b", {{2, 0, -1}, {1, 0, -1}}}};
  CHECK_THROWS_AS(Mesh::create(2, v, {0, 1, 2}, twice), InvalidArgument);
  CHECK_THROWS_AS(Mesh::create(2, {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, {0, 1, 2}, tags), InvalidArgument);
}

TEST_CASE("mesh: displaced copies share topology; inversion is reported") {
  const Mesh m = generate_box_mesh(2, {1, 1}, {2, 2});
  Field d(m.num_vertices(), 2);
  for (std::size_t i = 0; i < m.num_vertices(); ++i)
    d(i, 0) = 0.5;
  const Mesh moved = m.displaced(d);
  CHECK(moved.num_cells() == m.num_cells());
  CHECK(moved.total_volume() == doctest::Approx(1.0));
  CHECK(moved.vertex(0).x() == doctest::Approx(0.5));

  Field crush(m.num_vertices(), 2);
  for (std::size_t i = 0; i < m.num_vertices(); ++i)
    crush(i, 0) = -2.0 * m.vertex(i).x();
  CHECK_THROWS_AS(m.displaced(crush), SolverError);
}

TEST_CASE("quadrature: rules integrate quadratics exactly") {
  for (int dim : {2, 3}) {
    for (const auto& rule : {cell_rule(dim), refined_cell_rule(dim, 1), refined_cell_rule(dim, 2)}) {
      const double wsum = std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
      CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
      // Mean of lambda_0^2 over the simplex is 2 / ((d + 1)(d + 2)).
      double m = 0;
      for (std::size_t q = 0; q < rule.size(); ++q)
        m += rule.weights[q] * rule.points[q][0] * rule.points[q][0];
      CHECK(m == doctest::Approx(2.0 / ((dim + 1) * (dim + 2))).epsilon(1e-13));
    }
  }
}

TEST_CASE("weighted stiffness: symmetry, kernel and linearity in s") {
  const Mesh m = generate_box_mesh(2, {1, 1}, {6, 6});
  const Field one(m.num_vertices(), 1, 1.0), two(m.num_vertices(), 1, 2.0);
  const auto K1 = assemble_weighted_stiffness(m, one);
  const auto K2 = assemble_weighted_stiffness(m, two);

  const SparseMatrix diff = SparseMatrix(K1.matrix.transpose()) - K1.matrix;
  CHECK(diff.norm() == 0.0);
  CHECK(K1.symmetric);

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.num_vertices());
  CHECK((K1.matrix * ones).lpNorm<Eigen::Infinity>() < 1e-13);

  CHECK((K2.matrix - 2.0 * K1.matrix).norm() == 0.0);

  Field bad(m.num_vertices(), 1, 1.0);
  bad.values[3] = 0.0;
  CHECK_THROWS_AS(assemble_weighted_stiffness(m, bad), InvalidArgument);

  // Positive semidefinite: x^T K x >= 0 for a few random vectors.
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd x = Eigen::VectorXd::Random(m.num_vertices());
    CHECK(x.dot(K1.matrix * x) >= -1e-12);
  }
}

namespace {

Eigen::VectorXd solve_dirichlet(const Mesh& m, const Field& s, const Eigen::VectorXd& load,
                                const std::function<double(const Point&)>& g) {
  auto K = assemble_weighted_stiffness(m, s);
  Eigen::VectorXd rhs = load;
  std::vector<int> dofs = m.boundary_vertices();
  std::vector<double> vals;
  for (int v : dofs)
    vals.push_back(g(m.vertex(v)));
  apply_dirichlet(K, rhs, dofs, vals);
  return solve_linear(K, rhs, {SolverMethod::direct, 1e-12, 1});
}

} // namespace

TEST_CASE("weighted stiffness: linear Dirichlet data on a strip is reproduced") {
  const Mesh m = generate_box_mesh(2, {4, 0.25}, {32, 2});
  const Field one(m.num_vertices(), 1, 1.0);
  auto g = [](const Point& x) { return 0.7 * x.x() - 0.2; };
  const auto u = solve_dirichlet(m, one, Eigen::VectorXd::Zero(m.num_vertices()), g);
  for (std::size_t i = 0; i < m.num_vertices(); ++i)
    CHECK(std::abs(u[i] - g(m.vertex(i))) < 1e-12);
}

TEST_CASE("weighted stiffness: manufactured solution converges at second order") {
  // -lap u = 2 pi^2 sin(pi x) sin(pi y), u = 0 on the boundary.
  std::vector<double> errors;
  for (int n : {8, 16, 32}) {
    const Mesh m = generate_box_mesh(2, {1, 1}, {n, n});
    const Field one(m.num_vertices(), 1, 1.0);
    const auto M = assemble_mass(m);
    const Field f = scalar(m, [](const Point& x) {
      return 2 * M_PI * M_PI * std::sin(M_PI * x.x()) * std::sin(M_PI * x.y());
    });
    const Eigen::VectorXd load = M.matrix * f.as_vector();
    const auto u = solve_dirichlet(m, one, load, [](const Point&) { return 0.0; });
    const Field exact = scalar(m, [](const Point& x) { return std::sin(M_PI * x.x()) * std::sin(M_PI * x.y()); });
    const Eigen::VectorXd e = u - exact.as_vector();
    errors.push_back(std::sqrt(e.dot(M.matrix * e)));
  }
  for (std::size_t k = 1; k < errors.size(); ++k) {
    const double order = std::log2(errors[k - 1] / errors[k]);
    CHECK(order > 1.8);
    CHECK(order < 2.3);
  }
}

TEST_CASE("solve_linear: small systems and failure reporting") {
  SparseOperator id;
  id.matrix.resize(3, 3);
  id.matrix.setIdentity();
  id.symmetric = true;
  const Eigen::Vector3d b(1, -2, 3);
  CHECK((solve_linear(id, b, {}) - b).norm() < 1e-15);

  SparseOperator d;
  d.matrix.resize(2, 2);
  d.matrix.insert(0, 0) = 2;
  d.matrix.insert(1, 1) = 4;
  for (auto method : {SolverMethod::cg, SolverMethod::gmres, SolverMethod::direct}) {
    const auto x = solve_linear(d, Eigen::Vector2d(2, 4), {method, 1e-12, 100});
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(1.0));
  }

  const Mesh m = generate_box_mesh(2, {1, 1}, {16, 16});
  auto K = assemble_weighted_stiffness(m, Field(m.num_vertices(), 1, 1.0));
  Eigen::VectorXd rhs = Eigen::VectorXd::Ones(m.num_vertices());
  apply_dirichlet(K, rhs, m.tag_vertices("x0"), std::vector<double>(m.tag_vertices("x0").size(), 0.0));
  try {
    solve_linear(K, rhs, {SolverMethod::cg, 1e-12, 2});
    FAIL("expected NonConvergence");
  } catch (const NonConvergence& e) {
    CHECK(e.iterations() == 2);
    CHECK(e.residual() > 1e-12);
  }
  CHECK_THROWS_AS(solve_linear(K, rhs, {SolverMethod::cg, 1.5, 2}), InvalidArgument);
  CHECK_THROWS_AS(solve_linear(K, Eigen::VectorXd::Ones(3), {}), InvalidArgument);
}

TEST_CASE("apply_dirichlet keeps symmetry") {
  const Mesh m = generate_box_mesh(2, {1, 1}, {4, 4});
  auto K = assemble_weighted_stiffness(m, Field(m.num_vertices(), 1, 1.0));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m.num_vertices());
  const auto dofs = m.boundary_vertices();
  apply_dirichlet(K, rhs, dofs, std::vector<double>(dofs.size(), 1.0));
  CHECK((SparseMatrix(K.matrix.transpose()) - K.matrix).norm() == 0.0);
  for (int v : dofs)
    CHECK(rhs[v] == 1.0);
}

TEST_CASE("boundary flux: relative velocity, uniform flow and divergence theorem") {
  const Mesh m = generate_box_mesh(2, {2, 1}, {8, 4});
  const Field u = nodal(m, 2, [](const Point& x) { return Point(x.x() + 0.3, -x.y() + 0.1 * x.x(), 0); });
  CHECK(boundary_integral_flux(m, u, u, "x1") == 0.0);

  const Field uniform = nodal(m, 2, [](const Point&) { return Point(1.5, 0, 0); });
  const Field zero(m.num_vertices(), 2);
  CHECK(boundary_integral_flux(m, uniform, zero, "x1") == doctest::Approx(1.5 * 1.0));
  CHECK(boundary_integral_flux(m, uniform, zero, "x0") == doctest::Approx(-1.5 * 1.0));

  // div u = 0 for u = (x + 0.3, -y + 0.1 x): fluxes over all tags cancel.
  double total = 0;
  for (const auto& tag : m.tags())
    total += boundary_integral_flux(m, u, zero, tag);
  CHECK(std::abs(total) < 1e-13);

  const Mesh m3 = generate_box_mesh(3, {1, 1, 1}, {3, 3, 3});
  const Field u3 = nodal(m3, 3, [](const Point& x) { return Point(x.y(), x.z() - x.x(), 2 * x.x() + x.y()); });
  double total3 = 0;
  for (const auto& tag : m3.tags())
    total3 += boundary_integral_flux(m3, u3, Field(m3.num_vertices(), 3), tag);
  CHECK(std::abs(total3) < 1e-13);
  CHECK_THROWS_AS(boundary_integral_flux(m, u, zero, "nope"), InvalidArgument);
}

TEST_CASE("boundary flux: exact on a hand-computed facet") {
  // Single triangle; facet y = 0 from (0,0) to (2,0), outward normal -y.
  std::map<std::string, std::vector<FacetVertices>> tags{{"bottom", {{0, 1, -1}}}, {"rest", {{1, 2, -1}, {2, 0, -1}}}};
  const Mesh m = Mesh::create(2, {{0, 0, 0}, {2, 0, 0}, {0, 1, 0}}, {0, 1, 2}, tags);
  Field u(3, 2);
  u(0, 1) = 1.0;  // u_y = 1 at x = 0
  u(1, 1) = 3.0;  // u_y = 3 at x = 2
  // integral of -(1 + x) over [0, 2] = -4.
  CHECK(boundary_integral_flux(m, u, Field(3, 2), "bottom") == doctest::Approx(-4.0));
}

TEST_CASE("boundary mean pressure") {
  const Mesh m = generate_box_mesh(2, {1, 1}, {5, 5});
  CHECK(boundary_mean_pressure(m, Field(m.num_vertices(), 1, 7.25), "y0") == doctest::Approx(7.25));
  const Field px = scalar(m, [](const Point& x) { return x.x(); });
  CHECK(boundary_mean_pressure(m, px, "x1") == doctest::Approx(1.0));
  // Linear along a facet set symmetric about x = 0.5.
  CHECK(boundary_mean_pressure(m, px, "y1") == doctest::Approx(0.5));
  CHECK_THROWS_AS(boundary_mean_pressure(m, px, "z0"), InvalidArgument);
}

TEST_CASE("vtk: tagged mesh and fields survive a write/read cycle") {
  const Mesh m = generate_box_mesh(3, {1, 2, 1}, {2, 2, 1});
  const Field u = nodal(m, 3, [](const Point& x) { return Point(x.x(), 1.0 / 3.0, -x.z()); });
  const Field p = scalar(m, [](const Point& x) { return std::exp(x.y()); });
  const auto path = std::filesystem::temp_directory_path() / "cardioflow_test_mesh.vtk";
  write_vtk(path, m, {{"velocity", &u}, {"pressure", &p}}, {true, "test"});
  const auto data = read_vtk(path);
  const Mesh back = mesh_from_vtk(data);
  CHECK(back.num_cells() == m.num_cells());
  CHECK(back.tags() == m.tags());
  for (const auto& tag : m.tags())
    CHECK(back.facets(tag).size() == m.facets(tag).size());
  CHECK(data.point_data.at("velocity").values == u.values);
  CHECK(data.point_data.at("pressure").values == p.values);
  std::filesystem::remove(path);
}
