#include <doctest.h>

#include "cardioflow/common/error.hpp"
#include "cardioflow/fem/mesh.hpp"
#include "cardioflow/postproc/biomarkers.hpp"
#include "cardioflow/postproc/wss.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace cardioflow;
using namespace cardioflow::postproc;
namespace fs = std::filesystem;
using fem::Field;
using fem::Point;

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i)
    x[i] = a + (b - a) * i / (n - 1);
  return x;
}

Field poiseuille(const fem::Mesh& mesh, double gamma, double H, double sign = 1.0) {
  Field u(mesh.num_vertices(), mesh.dim(), 0.0);
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    const double y = mesh.vertex(v)[1];
    u(v, 0) = sign * gamma * y * (H - y);
  }
  return u;
}

double max_norm(const WallField& f) {
  double m = 0;
  for (std::size_t i = 0; i < f.vertices.size(); ++i)
    m = std::max(m, f.values.vec(i).norm());
  return m;
}

} // namespace

TEST_SUITE("postproc") {

TEST_CASE("chamber biomarkers from a one-beat volume curve") {
  // V = 150 - 80 s(t), s rising from 0 to 1 and back.
  const auto t = linspace(0.0, 0.8, 801);
  std::vector<double> V(t.size()), Q(t.size()), p(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double s = 0.5 * (1.0 - std::cos(2.0 * M_PI * t[i] / 0.8));
    V[i] = 150.0 - 80.0 * s;
    Q[i] = 300.0 * s;
    p[i] = t[i];
  }
  const auto b = chamber_biomarkers(t, V, Q, p, {});
  CHECK(b.EDV == doctest::Approx(150.0).epsilon(1e-12));
  CHECK(b.ESV == doctest::Approx(70.0).epsilon(1e-12));
  CHECK(b.SV == doctest::Approx(80.0).epsilon(1e-12));
  CHECK(100.0 * b.EF == doctest::Approx(53.333333333).epsilon(1e-9));
  CHECK(b.Q_max == doctest::Approx(300.0).epsilon(1e-12));
  CHECK(b.p_max == doctest::Approx(0.8).epsilon(1e-12));
  // Trapezoidal mean of a linear ramp is exact.
  CHECK(b.p_mean == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("calibration E volumes give its stroke volume and ejection fraction") {
  const std::vector<double> t{0.0, 0.4, 0.8}, V{151.0, 66.4, 151.0};
  const auto b = chamber_biomarkers(t, V, {}, {}, {});
  CHECK(std::abs(b.SV - 84.6) <= 0.5);
  CHECK(std::abs(100.0 * b.EF - 56.0) <= 0.5);
  // Consistent with the tabulated 84.9 mL / 56.1 % within rounding.
  CHECK(std::abs(b.SV - 84.9) <= 0.5);
  CHECK(std::abs(100.0 * b.EF - 56.1) <= 0.5);
}

TEST_CASE("constant volume and window handling") {
  const auto t = linspace(0.0, 1.0, 11);
  const std::vector<double> V(t.size(), 120.0);
  const auto b = chamber_biomarkers(t, V, {}, {}, {});
  CHECK(b.SV == 0.0);
  CHECK(b.EF == 0.0);

  CHECK_THROWS_AS(chamber_biomarkers(t, V, {}, {}, {2.0, 3.0}), InvalidArgument);
  CHECK_THROWS_AS(chamber_biomarkers({}, {}, {}, {}, {}), InvalidArgument);
  const std::vector<double> short_p{1.0};
  CHECK_THROWS_AS(chamber_biomarkers(t, V, {}, short_p, {}), InvalidArgument);

  // Only samples inside the window count.
  std::vector<double> W(t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    W[i] = 100.0 + 10.0 * t[i];
  const auto w = chamber_biomarkers(t, W, {}, {}, {0.5, 0.8});
  CHECK(w.ESV == doctest::Approx(105.0));
  CHECK(w.EDV == doctest::Approx(108.0));
}

TEST_CASE("EF stays in [0, 1] for positive volume series") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> vol(1e-3, 300.0);
  const auto t = linspace(0.0, 1.0, 50);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> V(t.size());
    for (auto& v : V)
      v = vol(rng);
    const auto b = chamber_biomarkers(t, V, {}, {}, {});
    CHECK(b.EF >= 0.0);
    CHECK(b.EF <= 1.0);
  }
}

TEST_CASE("normalization map") {
  const auto ef = BiomarkerRange::interval("EF_LV", 49.0, 73.0, "%", "clay2006normal");
  CHECK(normalize_biomarker(49.0, ef) == doctest::Approx(-1.0));
  CHECK(normalize_biomarker(73.0, ef) == doctest::Approx(1.0));
  // 2 (56.1 - 49)/24 - 1
  CHECK(normalize_biomarker(56.1, ef) == doctest::Approx(-0.408333333).epsilon(1e-9));
  CHECK(in_range(normalize_biomarker(56.1, ef)));
  CHECK_FALSE(in_range(normalize_biomarker(48.9, ef)));

  const auto pmax = BiomarkerRange::mean_sd("pmax_LV", 119.0, 13.0, "mmHg");
  CHECK(normalize_biomarker(119.0, pmax) == 0.0);
  CHECK(normalize_biomarker(132.0, pmax) == doctest::Approx(1.0));
  CHECK(display_normalized(normalize_biomarker(500.0, pmax), pmax) == kDisplayClip);
  CHECK(display_normalized(normalize_biomarker(-500.0, pmax), pmax) == -kDisplayClip);
  CHECK_FALSE(in_range(normalize_biomarker(500.0, pmax)));
  // The interval map is not clipped.
  CHECK(display_normalized(5.0, ef) == 5.0);

  CHECK_THROWS_AS(BiomarkerRange::interval("x", 2.0, 2.0), InvalidArgument);
  CHECK_THROWS_AS(BiomarkerRange::mean_sd("x", 1.0, 0.0), InvalidArgument);
}

TEST_CASE("normalization is strictly increasing in x") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  const auto a = BiomarkerRange::interval("a", -3.0, 11.0);
  const auto m = BiomarkerRange::mean_sd("m", 4.0, 0.7);
  for (int i = 0; i < 1000; ++i) {
    double x = u(rng), y = u(rng);
    if (x == y)
      continue;
    if (x > y)
      std::swap(x, y);
    CHECK(normalize_biomarker(x, a) < normalize_biomarker(y, a));
    CHECK(normalize_biomarker(x, m) < normalize_biomarker(y, m));
  }
}

TEST_CASE("range files") {
  const auto r = ranges_from_toml(toml::parse(R"(
[[biomarker]]
name = "EF_LV"
units = "%"
interval = [49, 73]
citation = "clay2006normal"

[[biomarker]]
name = "pmax_LV"
units = "mmHg"
mean = 119
sd = 13
column = "p_out_LH"
)"));
  REQUIRE(r.size() == 2);
  CHECK(r[0].kind == BiomarkerRange::Kind::interval);
  CHECK(r[0].a == 49.0);
  CHECK(r[0].b == 73.0);
  CHECK(r[0].citation == "clay2006normal");
  CHECK(r[1].kind == BiomarkerRange::Kind::mean_sd);
  CHECK(r[1].sd == 13.0);
  CHECK(r[1].column == "p_out_LH");

  CHECK_THROWS_AS(ranges_from_toml(toml::parse("[[biomarker]]\nname = \"x\"\ninterval = [3, 1]\n")), ParseError);
  CHECK_THROWS_AS(ranges_from_toml(toml::parse("[[biomarker]]\nname = \"x\"\nmean = 1\nsd = -1\n")), ParseError);
  CHECK_THROWS_AS(ranges_from_toml(toml::parse("[[biomarker]]\nname = \"x\"\n")), ParseError);
  CHECK_THROWS_AS(ranges_from_toml(toml::parse("[[biomarker]]\nname = \"x\"\nmean = 1\nsd = 1\nfoo = 2\n")),
                  ParseError);
}

TEST_CASE("shipped range registry loads") {
  const auto ranges = load_ranges(fs::path(CARDIOFLOW_SOURCE_DIR) / "data" / "biomarker_ranges.toml");
  std::map<std::string, BiomarkerRange> by_name;
  for (const auto& r : ranges)
    by_name[r.name] = r;
  REQUIRE(by_name.count("EF_LV"));
  CHECK(by_name["EF_LV"].a == 49.0);
  CHECK(by_name["EF_LV"].b == 73.0);
  REQUIRE(by_name.count("SV_LV"));
  REQUIRE(by_name.count("pmax_RV"));
  CHECK(by_name["pmax_RV"].mean == 35.0);
  CHECK(by_name["pmax_RV"].sd == 11.0);
  REQUIRE(by_name.count("vmax_MV"));
  REQUIRE(by_name.count("pmean_LA"));
  for (const auto& r : ranges)
    CHECK_FALSE(r.citation.empty());
}

TEST_CASE("series CSV and named biomarkers") {
  const std::string csv = "# comment\n"
                          "t,V_LV,p_LV,Q_AV,V_fluid\n"
                          "0.0,151,10,0,20\n"
                          "0.2,100,120,350,15\n"
                          "0.4,66.4,80,20,10\n"
                          "0.6,151,10,0,20\n";
  const auto s = parse_series_csv(csv);
  CHECK(s.rows() == 4);
  CHECK(series_biomarker(s, "EDV_LV", {}).value() == 151.0);
  CHECK(series_biomarker(s, "ESV_LV", {}).value() == 66.4);
  CHECK(series_biomarker(s, "EF_LV", {}).value() == doctest::Approx(100.0 * 84.6 / 151.0));
  CHECK(series_biomarker(s, "Qmax_AV", {}).value() == 350.0);
  CHECK(series_biomarker(s, "pmax_LV", {}).value() == 120.0);
  CHECK(series_biomarker(s, "pmean_LV", {}).value() == doctest::Approx((65.0 + 100.0 + 45.0) * 0.2 / 0.6));
  CHECK_FALSE(series_biomarker(s, "EDV_RV", {}).has_value());
  CHECK_FALSE(series_biomarker(s, "bogus", {}).has_value());
  CHECK(series_biomarker(s, "EDV_RV", {}, {{"V_RV", "V_fluid"}}).value() == 20.0);
  CHECK(series_biomarker(s, "EDV_XX", {}, {}, "V_fluid").value() == 20.0);

  CHECK_THROWS_AS(parse_series_csv("t,a\n1,2,3\n"), ParseError);
  CHECK_THROWS_AS(parse_series_csv("t,a\n1,x\n"), ParseError);
  CHECK_THROWS_AS(parse_series_csv("t,t\n"), ParseError);
}

TEST_CASE("report is pure and documents its mapping") {
  const auto s = parse_series_csv("t,V_LV\n0,151\n0.4,66.4\n0.8,151\n");
  const std::vector<BiomarkerRange> ranges{
      BiomarkerRange::interval("EF_LV", 49.0, 73.0, "%", "clay2006normal"),
      BiomarkerRange::interval("SV_LV", 81.0, 137.0, "mL", "maceira2006normalized"),
      BiomarkerRange::mean_sd("EDV_RV", 144.0, 23.0, "mL", "maceira2006reference"),
      BiomarkerRange::mean_sd("vmax_MV", 0.89, 0.15, "m/s", "thomas1998peak"),
  };
  ReportOptions opt;
  opt.values["vmax_MV"] = 1.03;
  const auto r1 = build_report(s, ranges, opt);
  const auto r2 = build_report(s, ranges, opt);
  CHECK(report_csv(r1) == report_csv(r2));
  REQUIRE(r1.rows.size() == 3);
  REQUIRE(r1.skipped == std::vector<std::string>{"EDV_RV"});
  CHECK(r1.rows[0].name == "EF_LV");
  CHECK(r1.rows[0].in_range);
  CHECK(r1.rows[1].value == doctest::Approx(84.6));
  CHECK(r1.rows[2].value == 1.03);
  CHECK(r1.rows[2].normalized == doctest::Approx((1.03 - 0.89) / 0.15));

  const auto text = report_csv(r1);
  CHECK(text.find("2(x - a)/(b - a) - 1") != std::string::npos);
  CHECK(text.find("(x - mean)/sd") != std::string::npos);
  CHECK(text.find("name,value,units,normalized,in_range,citation\n") != std::string::npos);
  CHECK(text.find("EF_LV,56.0265,%,-0.414459,true,clay2006normal") != std::string::npos);
}

TEST_CASE("rigid motion has no wall shear") {
  const auto mesh = fem::generate_box_mesh(2, {2.0, 1.0}, {12, 6});
  Field u(mesh.num_vertices(), 2);
  const double omega = 3.0;
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    const auto& x = mesh.vertex(v);
    u(v, 0) = 0.7 - omega * x[1];
    u(v, 1) = -0.2 + omega * x[0];
  }
  const auto w = wss_field(mesh, u, 3.5e-3, {"x0", "x1", "y0", "y1"});
  CHECK(w.vertices.size() == mesh.boundary_vertices().size());
  CHECK(max_norm(w) <= 1e-14);

  const auto mesh3 = fem::generate_box_mesh(3, {1.0, 1.0, 1.0}, {3, 3, 3});
  Field u3(mesh3.num_vertices(), 3);
  const Point a(0.1, -0.4, 0.3), om(0.5, -1.0, 2.0);
  for (std::size_t v = 0; v < mesh3.num_vertices(); ++v)
    u3.set_vec(v, a + om.cross(mesh3.vertex(v)));
  CHECK(max_norm(wss_field(mesh3, u3, 1.0, {"x0", "y1", "z0"})) <= 1e-13);
}

TEST_CASE("Poiseuille wall shear") {
  const double mu = 3.5e-3, gamma = 400.0, L = 0.08, H = 0.02;
  const double exact = mu * gamma * H;
  double prev_err = 1.0;
  for (int refine = 0; refine < 2; ++refine) {
    const int nx = 64 << refine, ny = 16 << refine;
    const double h = H / ny;
    const auto mesh = fem::generate_box_mesh(2, {L, H}, {nx, ny});
    const auto w = wss_field(mesh, poiseuille(mesh, gamma, H), mu, {"y0", "y1"});
    double worst = 0;
    for (std::size_t i = 0; i < w.vertices.size(); ++i) {
      // The P1 interpolant's wall-row slope is γ(H - h) exactly.
      CHECK(w.values.vec(i).norm() == doctest::Approx(mu * gamma * (H - h)).epsilon(1e-10));
      CHECK(std::abs(w.values(i, 1)) <= 1e-12 * exact);
      worst = std::max(worst, std::abs(w.values.vec(i).norm() - exact) / exact);
    }
    CHECK(worst < prev_err);
    prev_err = worst;
  }
  CHECK(prev_err <= 0.05);

  const auto mesh = fem::generate_box_mesh(2, {L, H}, {64, 16});
  const auto fwd = wss_field(mesh, poiseuille(mesh, gamma, H), mu, {"y0"});
  const auto back = wss_field(mesh, poiseuille(mesh, gamma, H, -1.0), mu, {"y0"});
  for (std::size_t i = 0; i < fwd.vertices.size(); ++i) {
    CHECK(back.values(i, 0) == doctest::Approx(-fwd.values(i, 0)).epsilon(1e-14));
    CHECK(back.values.vec(i).norm() == doctest::Approx(fwd.values.vec(i).norm()).epsilon(1e-14));
  }
}

TEST_CASE("3D shear flow wall stress") {
  const double mu = 2.0, gamma = 5.0, H = 1.0;
  const auto mesh = fem::generate_box_mesh(3, {1.0, H, 1.0}, {4, 8, 4});
  const auto w = wss_field(mesh, poiseuille(mesh, gamma, H), mu, {"y0"});
  for (std::size_t i = 0; i < w.vertices.size(); ++i)
    CHECK(w.values.vec(i).norm() == doctest::Approx(mu * gamma * (H - H / 8)).epsilon(1e-10));
}

TEST_CASE("WSS is tangential for arbitrary fields") {
  std::mt19937 rng(11);
  std::normal_distribution<double> g;
  for (int dim : {2, 3}) {
    const auto mesh = dim == 2 ? fem::generate_box_mesh(2, {1.0, 0.5}, {9, 5})
                               : fem::generate_box_mesh(3, {1.0, 0.5, 0.7}, {4, 3, 3});
    Field u(mesh.num_vertices(), dim);
    for (auto& x : u.values)
      x = g(rng);
    const auto tags = mesh.tags();
    const auto w = wss_field(mesh, u, 1.3, tags);
    const auto n = vertex_normals(mesh, tags);
    REQUIRE(n.vertices == w.vertices);
    for (std::size_t i = 0; i < w.vertices.size(); ++i) {
      const double mag = w.values.vec(i).norm();
      CHECK(std::abs(w.values.vec(i).dot(n.values.vec(i))) <= 1e-10 * std::max(mag, 1e-300));
      CHECK(n.values.vec(i).norm() == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("WSS tag errors") {
  const auto mesh = fem::generate_box_mesh(2, {1.0, 1.0}, {2, 2});
  const Field u(mesh.num_vertices(), 2, 0.0);
  CHECK_THROWS_AS(wss_field(mesh, u, 1.0, {"wall"}), InvalidArgument);
  CHECK_THROWS_AS(wss_field(mesh, u, 1.0, {}), InvalidArgument);
}

TEST_CASE("TAWSS") {
  WallField c;
  c.vertices = {0, 3, 5};
  c.values = Field(3, 2);
  c.values.set_vec(0, Point(0.3, -0.4, 0));
  c.values.set_vec(1, Point(1.7, 0.0, 0));
  c.values.set_vec(2, Point(0.0, 0.0, 0));

  const auto times = linspace(0.0, 0.8, 17);
  const std::vector<WallField> constant(times.size(), c);
  const auto t1 = tawss(constant, times);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(std::abs(t1.values(i, 0) - c.values.vec(i).norm()) <= 1e-12 * std::max(1.0, c.values.vec(i).norm()));

  std::vector<WallField> alternating;
  for (std::size_t k = 0; k < times.size(); ++k) {
    WallField s = c;
    if (k % 2)
      for (auto& x : s.values.values)
        x = -x;
    alternating.push_back(s);
  }
  const auto t2 = tawss(alternating, times);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(t2.values(i, 0) == doctest::Approx(c.values.vec(i).norm()).epsilon(1e-12));

  // Linear ramp of the magnitude: trapezoid is exact.
  std::vector<WallField> ramp;
  for (double t : times) {
    WallField s = c;
    for (auto& x : s.values.values)
      x *= t;
    ramp.push_back(s);
  }
  const auto t3 = tawss(ramp, times);
  CHECK(t3.values(1, 0) == doctest::Approx(1.7 * 0.4));

  CHECK(tawss({c}, {0.0}).values(0, 0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(tawss({}, {}), InvalidArgument);
  CHECK_THROWS_AS(tawss({c, c}, {0.0, 0.0}), InvalidArgument);
}

TEST_CASE("regional statistics on a hand-built patch") {
  // Bottom edge of a 4x1 box: vertices at x = 0..4 carry 1..5.
  const auto mesh = fem::generate_box_mesh(2, {4.0, 1.0}, {4, 1});
  WallField f;
  f.vertices = mesh.tag_vertices("y0");
  f.values = Field(f.vertices.size(), 1);
  for (std::size_t i = 0; i < f.vertices.size(); ++i)
    f.values(i, 0) = 1.0 + mesh.vertex(f.vertices[i])[0];
  const auto s = region_stats(mesh, f, "y0");
  CHECK(s.min == 1.0);
  CHECK(s.max == 5.0);
  CHECK(s.area == doctest::Approx(4.0));
  // (0.5*1 + 2 + 3 + 4 + 0.5*5) / 4
  CHECK(s.mean == doctest::Approx(3.0));
  CHECK_THROWS_AS(region_stats(mesh, f, "x1"), InvalidArgument);
  CHECK_THROWS_AS(region_stats(mesh, f, "nope"), InvalidArgument);
}

TEST_CASE("probe velocity") {
  const auto mesh = fem::generate_box_mesh(2, {0.04, 0.02}, {20, 10});
  Field u(mesh.num_vertices(), 2);
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    const double th = 0.3 * v;
    u(v, 0) = 1.03 * std::cos(th);
    u(v, 1) = 1.03 * std::sin(th);
  }
  const Point c(0.02, 0.01, 0.0);
  CHECK(probe_velocity(mesh, u, {c, 0.005}) == doctest::Approx(1.03).epsilon(1e-14));
  CHECK(probe_velocity(mesh, u, {c, 0.002}) == doctest::Approx(probe_velocity(mesh, u, {c, 0.008})).epsilon(1e-14));
  CHECK_THROWS_AS(probe_velocity(mesh, u, {Point(1.0, 1.0, 0.0), 0.01}), InvalidArgument);

  // Lumped vertex volumes integrate P1 fields exactly: u_x = 1 + x over
  // the whole box averages to 1 + L/2.
  Field ramp(mesh.num_vertices(), 2, 0.0);
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
    ramp(v, 0) = 1.0 + mesh.vertex(v)[0];
  CHECK(probe_velocity(mesh, ramp, {c, 1.0}) == doctest::Approx(1.02).epsilon(1e-12));
}

TEST_CASE("snapshot manifest") {
  const fs::path dir = fs::temp_directory_path() / "cardioflow_postproc_manifest";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "snapshots.json")
      << R"({"rho": 1060, "mu": 0.0035, "snapshots": [{"step": 0, "t": 0.0, "file": "a.vtk"},
                                                      {"step": 10, "t": 0.01, "file": "b.vtk"}]})";
  const auto s = read_snapshot_manifest(dir);
  CHECK(s.mu == 0.0035);
  REQUIRE(s.entries.size() == 2);
  CHECK(s.entries[1].step == 10);
  CHECK(s.entries[1].file == dir / "b.vtk");
  CHECK_THROWS_AS(read_snapshot_manifest(dir / "missing"), ParseError);
}

} // TEST_SUITE
