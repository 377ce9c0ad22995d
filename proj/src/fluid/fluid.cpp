#include "cardioflow/fluid/fluid.hpp"

#include "cardioflow/common/error.hpp"
#include "cardioflow/common/parallel.hpp"
#include "cardioflow/fem/assembly.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <numbers>

namespace cardioflow::fluid {

void FluidProperties::validate() const {
  if (!(rho > 0) || !(mu > 0) || !std::isfinite(rho) || !std::isfinite(mu))
    throw InvalidArgument("fluid: rho and mu must be positive");
}

ViscousForm parse_viscous_form(const std::string& name) {
  if (name == "stress")
    return ViscousForm::stress;
  if (name == "laplacian")
    return ViscousForm::laplacian;
  throw InvalidArgument(fmt::format("fluid: unknown viscous form '{}'", name));
}

void BoundaryConditions::validate(const Mesh& mesh) const {
  std::map<std::string, int> count;
  for (const auto& [tag, p] : neumann) {
    if (!std::isfinite(p))
      throw InvalidArgument(fmt::format("fluid: non-finite pressure on '{}'", tag));
    ++count[tag];
  }
  for (const auto& tag : walls)
    ++count[tag];
  for (const auto& [tag, v] : velocity) {
    if (!v.allFinite())
      throw InvalidArgument(fmt::format("fluid: non-finite velocity on '{}'", tag));
    ++count[tag];
  }
  for (const auto& [tag, n] : count) {
    if (!mesh.has_tag(tag))
      throw InvalidArgument(fmt::format("fluid: boundary condition on unknown tag '{}'", tag));
    if (n > 1)
      throw InvalidArgument(fmt::format("fluid: tag '{}' has more than one condition", tag));
  }
  for (const auto& tag : mesh.tags())
    if (!count.count(tag))
      throw InvalidArgument(fmt::format("fluid: tag '{}' has no boundary condition", tag));
}

double cell_size(const Mesh& mesh, std::size_t c) {
  const double v = mesh.cell_volume(c);
  if (mesh.dim() == 2)
    return 2.0 * std::sqrt(v / std::numbers::pi);
  return 2.0 * std::cbrt(3.0 * v / (4.0 * std::numbers::pi));
}

namespace {

Point cell_mean(const Mesh& mesh, std::size_t c, const Field& f) {
  Point m = Point::Zero();
  for (int v : mesh.cell(c))
    m += f.vec(v);
  return m / mesh.vertices_per_cell();
}

void check_field(const Mesh& mesh, const Field& f, const char* name) {
  if (f.num_nodes() != mesh.num_vertices() || f.components != mesh.dim())
    throw InvalidArgument(fmt::format("fluid: {} must be a vector field on the mesh", name));
  if (!f.is_finite())
    throw SolverError(fmt::format("fluid: {} contains non-finite values", name));
}

double tau_momentum(double rho, double mu, double dt, double h, double speed, double c_r,
                    const StabilizationOptions& s) {
  const double t = std::isfinite(dt) ? rho / dt : 0.0;
  const double a = 2.0 * rho * speed / h;
  const double d = s.c_inv * mu / (h * h);
  return 1.0 / std::sqrt(s.sigma_t * t * t + a * a + d * d + c_r * c_r);
}

} // namespace

StabilizationParameters stabilization_parameters(const Mesh& mesh, const Field& u_conv, double dt,
                                                 const FluidProperties& props, const StabilizationOptions& stab,
                                                 const std::vector<double>* riis_cell_mean) {
  if (!(dt > 0))
    throw InvalidArgument("fluid: dt must be positive");
  StabilizationParameters out;
  out.tau_m.resize(mesh.num_cells());
  out.tau_c.resize(mesh.num_cells());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const double h = cell_size(mesh, c);
    const double cr = riis_cell_mean ? (*riis_cell_mean)[c] : 0.0;
    out.tau_m[c] = tau_momentum(props.rho, props.mu, dt, h, cell_mean(mesh, c, u_conv).norm(), cr, stab);
    out.tau_c[c] = h * h / (stab.c_continuity * out.tau_m[c]);
  }
  return out;
}

FluidStepResult fluid_step(const FluidStepInputs& in, const FluidOptions& opt) {
  if (!in.mesh)
    throw InvalidArgument("fluid: no mesh");
  const Mesh& mesh = *in.mesh;
  const int dim = mesh.dim(), nd = dim + 1, nl = dim + 1;
  if (!(in.dt > 0))
    throw InvalidArgument("fluid: dt must be positive");
  opt.props.validate();
  in.bc.validate(mesh);
  check_field(mesh, in.u_n, "u_n");
  check_field(mesh, in.u_ale, "u_ale");
  if (in.riis) {
    if (!in.riis_target || in.riis->vertex_weight.size() != mesh.num_vertices())
      throw InvalidArgument("fluid: penalty coefficients need a target load on the same mesh");
    for (double w : in.riis->vertex_weight)
      if (!std::isfinite(w))
        throw SolverError("fluid: non-finite immersed-surface coefficient");
    check_field(mesh, *in.riis_target, "penalty target");
  }

  const double rho = opt.props.rho, mu = opt.props.mu;
  const bool transient = std::isfinite(in.dt);
  const double rdt = transient ? rho / in.dt : 0.0;
  const bool stress = opt.viscous == ViscousForm::stress;
  const bool stab = opt.stab.enabled;
  const std::size_t nv = mesh.num_vertices(), nc = mesh.num_cells();
  const Eigen::Index ndof = static_cast<Eigen::Index>(nv * nd);
  const double mass_den = double((dim + 1) * (dim + 2));

  Field a(nv, dim); // convective velocity u_n - u_ALE
  for (std::size_t k = 0; k < a.values.size(); ++k)
    a.values[k] = in.u_n.values[k] - in.u_ale.values[k];

  const int nloc = nl * nd;
  std::vector<double> local_rhs(nc * nloc, 0.0);
  std::vector<double> cell_cfl(nc, 0.0);

  auto kernel = [&](std::size_t c, std::vector<fem::Triplet>& out) {
    const auto cell = mesh.cell(c);
    const auto pts = fem::cell_points(mesh, c);
    const auto G = fem::barycentric_gradients(dim, std::span<const Point>(pts.data(), nl));
    const double vol = mesh.cell_volume(c);
    const double h = cell_size(mesh, c);
    Point aK = Point::Zero(), unK = Point::Zero();
    for (int i = 0; i < nl; ++i) {
      aK += a.vec(cell[i]);
      unK += in.u_n.vec(cell[i]);
    }
    aK /= nl;
    unK /= nl;
    if (transient)
      cell_cfl[c] = aK.norm() * in.dt / h;
    double tm = 0, tc = 0;
    if (stab) {
      const double cr = in.riis ? in.riis->cell_mean[c] : 0.0;
      tm = tau_momentum(rho, mu, in.dt, h, aK.norm(), cr, opt.stab);
      tc = h * h / (opt.stab.c_continuity * tm);
    }
    // int phi_i a
    std::array<Point, 4> abar;
    for (int i = 0; i < nl; ++i) {
      abar[i] = Point::Zero();
      for (int k = 0; k < nl; ++k)
        abar[i] += vol * (i == k ? 2.0 : 1.0) / mass_den * a.vec(cell[k]);
    }
    std::array<double, 4> aG;
    for (int i = 0; i < nl; ++i)
      aG[i] = aK.dot(G[i]);

    auto row = [&](int i, int comp) { return cell[i] * nd + comp; };
    for (int i = 0; i < nl; ++i) {
      for (int j = 0; j < nl; ++j) {
        const double mij = vol * (i == j ? 2.0 : 1.0) / mass_den;
        const double gg = G[i].dot(G[j]);
        const double conv = abar[i].dot(G[j]);
        // rho/dt phi_j + rho a.grad phi_j integrated against a constant
        const double res_u = rdt * vol / nl + rho * aG[j] * vol;
        double diag = rdt * mij + rho * conv + mu * vol * gg;
        if (stab)
          diag += tm * rho * aG[i] * res_u;
        for (int e = 0; e < dim; ++e) {
          for (int cc = 0; cc < dim; ++cc) {
            double v = e == cc ? diag : 0.0;
            if (stress)
              v += mu * vol * G[i][cc] * G[j][e];
            if (stab)
              v += tc * vol * G[i][e] * G[j][cc];
            if (v != 0.0)
              out.emplace_back(row(i, e), row(j, cc), v);
          }
          double vp = -vol / nl * G[i][e];
          if (stab)
            vp += tm * rho * aG[i] * G[j][e] * vol;
          out.emplace_back(row(i, e), row(j, dim), vp);
          double vc = vol / nl * G[j][e];
          if (stab)
            vc += tm * G[i][e] * res_u;
          out.emplace_back(row(i, dim), row(j, e), vc);
        }
        if (stab)
          out.emplace_back(row(i, dim), row(j, dim), tm * vol * gg);
      }
      double* r = &local_rhs[c * nloc + i * nd];
      for (int e = 0; e < dim; ++e) {
        double s = 0;
        for (int j = 0; j < nl; ++j)
          s += vol * (i == j ? 2.0 : 1.0) / mass_den * in.u_n(cell[j], e);
        r[e] += rdt * s;
        if (stab)
          r[e] += tm * rho * aG[i] * rdt * vol * unK[e];
      }
      if (stab)
        r[dim] += tm * rdt * vol * G[i].dot(unK);
    }
  };

  fem::SparseOperator op = fem::assemble_cells(mesh, ndof, kernel, false);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ndof);
  for (std::size_t c = 0; c < nc; ++c) {
    const auto cell = mesh.cell(c);
    for (int i = 0; i < nl; ++i)
      for (int e = 0; e < nd; ++e)
        rhs[cell[i] * nd + e] += local_rhs[c * nloc + i * nd + e];
  }

  std::vector<fem::Triplet> extra;
  for (Eigen::Index k = 0; k < ndof; ++k)
    extra.emplace_back(int(k), int(k), 0.0);
  if (in.riis) {
    for (std::size_t v = 0; v < nv; ++v) {
      const double w = in.riis->vertex_weight[v];
      if (w == 0.0)
        continue;
      for (int e = 0; e < dim; ++e) {
        extra.emplace_back(int(v * nd + e), int(v * nd + e), w);
        rhs[v * nd + e] += (*in.riis_target)(v, e);
      }
    }
  }
  for (const auto& [tag, pn] : in.bc.neumann) {
    for (const auto& f : mesh.facets(tag)) {
      const double share = f.measure / dim;
      for (int k = 0; k < dim; ++k) {
        const int v = f.vertices[k];
        for (int e = 0; e < dim; ++e)
          rhs[v * nd + e] -= pn * f.normal[e] * share;
        if (opt.stab.backflow) {
          const double an = a.vec(v).dot(f.normal);
          if (an < 0)
            for (int e = 0; e < dim; ++e)
              extra.emplace_back(v * nd + e, v * nd + e, 0.5 * rho * opt.stab.beta * (-an) * share);
        }
      }
    }
  }
  fem::SparseMatrix extra_m(ndof, ndof);
  extra_m.setFromTriplets(extra.begin(), extra.end());
  op.matrix += extra_m;

  // Dirichlet rows.
  std::vector<char> fixed(ndof, 0);
  Eigen::VectorXd value = Eigen::VectorXd::Zero(ndof);
  auto fix = [&](Eigen::Index dof, double x) {
    fixed[dof] = 1;
    value[dof] = x;
  };
  for (const auto& tag : in.bc.walls)
    for (int v : mesh.tag_vertices(tag))
      for (int e = 0; e < dim; ++e)
        fix(v * nd + e, in.u_ale(v, e));
  for (const auto& [tag, u] : in.bc.velocity)
    for (int v : mesh.tag_vertices(tag))
      for (int e = 0; e < dim; ++e)
        fix(v * nd + e, u[e]);
  if (in.bc.neumann.empty())
    fix(dim, 0.0);
  for (Eigen::Index r = 0; r < ndof; ++r) {
    if (!fixed[r])
      continue;
    for (fem::SparseMatrix::InnerIterator it(op.matrix, r); it; ++it)
      it.valueRef() = it.col() == r ? 1.0 : 0.0;
    rhs[r] = value[r];
  }
  op.matrix.prune(0.0);
  op.symmetric = false;

  FluidStepResult res;
  const Eigen::VectorXd x = fem::solve_linear(op, rhs, opt.solver, &res.stats);
  res.solve_count = 1;
  res.residual = res.stats.relative_residual;
  if (!x.allFinite())
    throw SolverError("fluid: linear solve produced non-finite values");
  res.u = Field(nv, dim);
  res.p = Field(nv, 1);
  for (std::size_t v = 0; v < nv; ++v) {
    for (int e = 0; e < dim; ++e)
      res.u(v, e) = x[v * nd + e];
    res.p.values[v] = x[v * nd + dim];
  }
  for (double c : cell_cfl)
    res.cfl = std::max(res.cfl, c);
  return res;
}

SteadyResult solve_steady(FluidStepInputs in, const FluidOptions& opt, const SteadyOptions& steady) {
  in.dt = std::numeric_limits<double>::infinity();
  SteadyResult out;
  for (out.iterations = 1; out.iterations <= steady.max_iter; ++out.iterations) {
    out.last = fluid_step(in, opt);
    double diff = 0, scale = 0;
    for (std::size_t k = 0; k < in.u_n.values.size(); ++k) {
      diff = std::max(diff, std::abs(out.last.u.values[k] - in.u_n.values[k]));
      scale = std::max(scale, std::abs(out.last.u.values[k]));
    }
    out.change = scale > 0 ? diff / scale : diff;
    in.u_n = out.last.u;
    if (out.change <= steady.tol) {
      out.converged = true;
      return out;
    }
  }
  out.iterations = steady.max_iter;
  return out;
}

EnergyReport energy_report(const Mesh& mesh, const Field& u, const Field& p, const FluidProperties& props,
                           const Field* u_ale) {
  const int dim = mesh.dim();
  EnergyReport r;
  const auto M = fem::assemble_mass(mesh);
  for (int e = 0; e < dim; ++e) {
    Eigen::VectorXd ue(mesh.num_vertices());
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
      ue[v] = u(v, e);
    r.kinetic += 0.5 * props.rho * ue.dot(M.matrix * ue);
  }
  for (const auto& [tag, facets] : mesh.boundary()) {
    double kf = 0, pw = 0;
    for (const auto& f : facets) {
      // Vertex quadrature on the facet.
      for (int k = 0; k < dim; ++k) {
        const int v = f.vertices[k];
        Point rel = u.vec(v);
        if (u_ale)
          rel -= u_ale->vec(v);
        const double un = rel.dot(f.normal);
        kf += f.measure / dim * 0.5 * props.rho * u.vec(v).squaredNorm() * un;
        pw += f.measure / dim * p.values[v] * un;
      }
    }
    r.kinetic_flux[tag] = kf;
    r.pressure_power[tag] = pw;
  }
  return r;
}

} // namespace cardioflow::fluid
