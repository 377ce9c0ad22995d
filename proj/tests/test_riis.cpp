#include <doctest.h>

#include "cardioflow/common/error.hpp"
#include "cardioflow/riis/riis.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace cardioflow;
using namespace cardioflow::riis;
using fem::Field;
using fem::Mesh;

namespace {

// Channel [0, 4 mm] x [0, 1 mm] with a transverse segment at x = 2 mm.
struct Channel {
  Mesh mesh;
  ValveSpec valve;
  std::vector<double> phi;
};

Channel channel(int nx, int ny, double eps, double R = 1e4) {
  Channel c{fem::generate_box_mesh(2, {4e-3, 1e-3}, {nx, ny}), {}, {}};
  c.valve.name = "V";
  c.valve.R = R;
  c.valve.eps = eps;
  c.valve.open_time = 0.2;
  c.valve.close_time = 0.6;
  c.valve.closed_surface = std::make_shared<Surface>(polyline({{2e-3, -1e-3, 0}, {2e-3, 2e-3, 0}}));
  DistanceCache cache(c.mesh);
  c.phi = *cache.distances(c.valve, false);
  return c;
}

} // namespace

TEST_CASE("signed distance: on-surface and planar cases") {
  const Surface plane = quad_patch({-5, -5, 0}, {5, -5, 0}, {5, 5, 0}, {-5, 5, 0});
  CHECK(std::abs(signed_distance(plane, {0.3, 0.1, 0})) < 1e-14);
  CHECK(signed_distance(plane, {0, 0, 0.7}) == doctest::Approx(0.7));
  CHECK(signed_distance(plane, {0, 0, -0.7}) == doctest::Approx(-0.7));
  const Surface flipped = quad_patch({-5, -5, 0}, {-5, 5, 0}, {5, 5, 0}, {5, -5, 0});
  CHECK(signed_distance(flipped, {0, 0, 0.7}) == doctest::Approx(-0.7));

  const Surface seg = polyline({{0, 0, 0}, {1, 0, 0}});
  CHECK(signed_distance(seg, {0.5, 0, 0}) == 0.0);
  CHECK(std::abs(signed_distance(seg, {0.5, 0.25, 0})) == doctest::Approx(0.25));
  CHECK(signed_distance(seg, {0.5, 0.25, 0}) == -signed_distance(seg, {0.5, -0.25, 0}));
  CHECK(std::abs(signed_distance(seg, {2, 0, 0})) == doctest::Approx(1.0));
  CHECK_THROWS_AS(signed_distance(Surface{}, {0, 0, 0}), InvalidArgument);
}

TEST_CASE("signed distance: unit square patch against exhaustive minimisation") {
  const Surface sq = quad_patch({0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0});
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  for (int trial = 0; trial < 40; ++trial) {
    const fem::Point x(u(rng), u(rng), u(rng) - 0.5);
    // Closed form for the axis-aligned square.
    const double dx = std::max({0.0, -x.x(), x.x() - 1}), dy = std::max({0.0, -x.y(), x.y() - 1});
    const double exact = std::sqrt(dx * dx + dy * dy + x.z() * x.z());
    // Brute force over a fine barycentric sampling of each facet.
    double sampled = 1e300;
    const int n = 200;
    for (const auto& el : sq.elements) {
      for (int i = 0; i <= n; ++i)
        for (int j = 0; i + j <= n; ++j) {
          const fem::Point p = sq.vertices[el[0]] * (1.0 - double(i + j) / n) + sq.vertices[el[1]] * (double(i) / n) +
                               sq.vertices[el[2]] * (double(j) / n);
          sampled = std::min(sampled, (x - p).norm());
        }
    }
    const double d = std::abs(signed_distance(sq, x));
    CHECK(d == doctest::Approx(exact).epsilon(1e-12));
    CHECK(d <= sampled + 1e-15);
    CHECK(sampled - d < 1e-2);
  }
}

TEST_CASE("smoothed delta") {
  const double eps = 0.68e-3;
  CHECK(smoothed_delta(eps, eps) == doctest::Approx(0.0).scale(1.0 / eps));
  CHECK(smoothed_delta(-eps, eps) == doctest::Approx(0.0).scale(1.0 / eps));
  CHECK(smoothed_delta(2 * eps, eps) == 0.0);
  CHECK(smoothed_delta(0.0, eps) == doctest::Approx(1.0 / eps));
  // Composite Simpson over [-eps, eps].
  const int n = 2000;
  double integral = 0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    integral += w * smoothed_delta(-eps + 2 * eps * i / n, eps);
  }
  integral *= 2 * eps / n / 3;
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("valve timing") {
  const auto preset = zygote_times_preset();
  REQUIRE(preset.size() == 4);
  const auto& mv = preset[0];
  const auto& av = preset[1];
  CHECK(mv.name == "MV");
  CHECK(mv.eps == doctest::Approx(0.68e-3));
  CHECK(preset[3].eps == doctest::Approx(0.52e-3));
  CHECK(av.R == 1e4);
  CHECK(valve_open_at(av, 0.4, 0.8));
  CHECK(!valve_open_at(mv, 0.4, 0.8));
  CHECK(valve_open_at(av, 0.262, 0.8));
  CHECK(!valve_open_at(av, 0.666, 0.8));
  CHECK(valve_open_at(mv, 0.710, 0.8));
  CHECK(valve_open_at(mv, 0.1, 0.8));
  CHECK(!valve_open_at(mv, 0.208, 0.8));
  CHECK(valve_open_at(av, 0.4 + 3 * 0.8, 0.8));
  for (const auto& v : preset)
    CHECK_NOTHROW(v.validate(0.8));
  auto bad = av;
  bad.close_time = bad.open_time;
  CHECK_THROWS_AS(bad.validate(0.8), InvalidArgument);
  bad = av;
  bad.eps = 0;
  CHECK_THROWS_AS(bad.validate(0.8), InvalidArgument);
}

TEST_CASE("riis operator: empty, linear in R, symmetric and banded") {
  const Channel c = channel(64, 16, 0.5e-3);
  const auto none = riis_coefficients(c.mesh, {});
  CHECK(assemble_riis_operator(c.mesh, none).matrix.nonZeros() == 0);

  const auto k1 = riis_coefficients(c.mesh, {{&c.valve, &c.phi}});
  ValveSpec doubled = c.valve;
  doubled.R *= 2;
  const auto k2 = riis_coefficients(c.mesh, {{&doubled, &c.phi}});
  const auto A1 = assemble_riis_operator(c.mesh, k1), A2 = assemble_riis_operator(c.mesh, k2);
  CHECK((A2.matrix - 2.0 * A1.matrix).norm() <= 1e-12 * A1.matrix.norm());
  CHECK((fem::SparseMatrix(A1.matrix.transpose()) - A1.matrix).norm() == 0.0);

  // Vertices whose cells all lie outside the band have empty rows.
  const double h = 4e-3 / 64;
  for (std::size_t v = 0; v < c.mesh.num_vertices(); ++v) {
    const double dx = std::abs(c.mesh.vertex(v).x() - 2e-3);
    if (dx > c.valve.eps + 1.5 * h) {
      CHECK(A1.matrix.row(2 * v).nonZeros() == 0);
    }
    for (int comp = 0; comp < 2; ++comp)
      CHECK(A1.matrix.coeff(2 * v + comp, 2 * v + comp) >= 0.0);
  }
}

TEST_CASE("riis operator: trace matches (R/eps) area dim on a band-resolving mesh") {
  std::vector<double> err;
  for (int n : {1, 2, 4}) {
    const double eps = 0.5e-3;
    const Channel c = channel(32 * n, 8 * n, eps);
    const auto A = assemble_riis_operator(c.mesh, riis_coefficients(c.mesh, {{&c.valve, &c.phi}}));
    const double expected = c.valve.R / eps * 1e-3 * 2;
    err.push_back(std::abs(A.matrix.diagonal().sum() - expected) / expected);
  }
  CHECK(err.back() < 0.05);
  CHECK(err.back() <= err.front());

  // 3D: a transverse planar patch through the box.
  const Mesh m = fem::generate_box_mesh(3, {2e-3, 1e-3, 1e-3}, {16, 8, 8});
  ValveSpec v;
  v.name = "P";
  v.eps = 0.3e-3;
  v.open_time = 0.1;
  v.close_time = 0.5;
  v.closed_surface = std::make_shared<Surface>(
      quad_patch({1e-3, -1e-3, -1e-3}, {1e-3, 2e-3, -1e-3}, {1e-3, 2e-3, 2e-3}, {1e-3, -1e-3, 2e-3}));
  DistanceCache cache(m);
  const auto* phi = cache.distances(v, false);
  const auto A = assemble_riis_operator(m, riis_coefficients(m, {{&v, phi}}));
  const double expected = v.R / v.eps * 1e-6 * 3;
  CHECK(A.matrix.diagonal().sum() == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("riis: penalty residual vanishes for u = u_ALE with a static leaflet") {
  const Channel c = channel(32, 8, 0.5e-3);
  const std::vector<ActiveValve> active{{&c.valve, &c.phi}};
  const auto k = riis_coefficients(c.mesh, active);
  const auto A = assemble_riis_operator(c.mesh, k);
  Field u(c.mesh.num_vertices(), 2);
  for (std::size_t v = 0; v < c.mesh.num_vertices(); ++v) {
    u(v, 0) = std::sin(1e3 * c.mesh.vertex(v).y());
    u(v, 1) = 0.2 * c.mesh.vertex(v).x();
  }
  const Field load = riis_target_load(c.mesh, active, k, u);
  const Eigen::VectorXd r = A.matrix * u.as_vector() - load.as_vector();
  CHECK(r.lpNorm<Eigen::Infinity>() <= 1e-12 * (A.matrix * u.as_vector()).lpNorm<Eigen::Infinity>());
}

TEST_CASE("riis: distance cache and band resolution") {
  Channel c = channel(64, 16, 0.5e-3);
  DistanceCache cache(c.mesh);
  const auto* a = cache.distances(c.valve, false);
  CHECK(a == cache.distances(c.valve, false));
  CHECK(cache.distances(c.valve, true) == nullptr);
  const double h = band_mesh_size(c.mesh, {&c.valve, a});
  CHECK(h == doctest::Approx(std::hypot(4e-3 / 64, 1e-3 / 16)));
  CHECK(c.valve.eps >= 1.5 * 0.25e-3 * 0.25);
}

TEST_CASE("surface files") {
  const auto dir = std::filesystem::temp_directory_path() / "cardioflow_riis";
  std::filesystem::create_directories(dir);
  const Surface sq = quad_patch({0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0});
  write_stl(dir / "sq.stl", sq);
  const Surface back = read_stl(dir / "sq.stl");
  CHECK(back.vertices.size() == 4);
  CHECK(back.size() == 2);
  CHECK(back.measure() == doctest::Approx(1.0));
  CHECK(signed_distance(back, {0.5, 0.5, 0.3}) == doctest::Approx(0.3));

  {
    std::ofstream f(dir / "leaf.csv");
    f << "x,y\n0,0\n1,0\n1,1\n\n5,5\n6,5\n";
  }
  const Surface pl = read_polyline_csv(dir / "leaf.csv");
  CHECK(pl.vertices.size() == 5);
  CHECK(pl.size() == 3);
  CHECK(pl.measure() == doctest::Approx(3.0));
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(read_stl(dir / "missing.stl"), ParseError);
}
