#include "steinlab/meanfield1d.hpp"

#include "steinlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace steinlab {

std::string to_string(FluxScheme scheme) { return scheme == FluxScheme::upwind ? "upwind" : "muscl"; }

FluxScheme parse_flux_scheme(const std::string& name) {
  if (name == "upwind") return FluxScheme::upwind;
  if (name == "muscl") return FluxScheme::muscl;
  throw ConfigError("unknown flux scheme '" + name + "' (expected upwind or muscl)");
}

namespace {

Vector potential_slope(const Potential& potential, const Vector& x) {
  Vector out(x.size());
  Vector xi(1);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xi[0] = x[i];
    double g = 0.0;
    potential.gradient_into({xi.data(), 1}, {&g, 1});
    out[i] = g;
  }
  return out;
}

struct KernelFunctions {
  const Kernel& kernel;
  double value(double r) const {
    Vector z = Vector::Constant(1, r);
    return kernel.value(z);
  }
  double slope(double r) const {
    double g = 0.0;
    kernel.value_and_gradient({&r, 1}, {&g, 1});
    return g;
  }
  double curvature(double r) const {
    Vector z = Vector::Constant(1, r);
    return kernel.laplacian(z);
  }
};

Vector face_velocity_values(const Vector& rho, const UniformGrid1D& grid, const Vector& v_slope, const Kernel& kernel,
                            ConvolutionMethod method) {
  const double dx = grid.spacing();
  const KernelFunctions kf{kernel};
  const Vector a = grid_convolve(rho, dx, [&](double r) { return kf.slope(r); }, 0.5 * dx, method);
  const Vector b = grid_convolve(rho.cwiseProduct(v_slope), dx, [&](double r) { return kf.value(r); }, 0.5 * dx, method);
  return -(a + b).head(rho.size() - 1);
}

double van_leer(double a, double b) { return a * b > 0.0 ? 2.0 * a * b / (a + b) : 0.0; }

// -d/dx (rho u) with zero boundary flux.
Vector flux_divergence(const Vector& rho, const Vector& u, double dx, FluxScheme scheme) {
  const Eigen::Index n = rho.size();
  Vector slope = Vector::Zero(n);
  if (scheme == FluxScheme::muscl)
    for (Eigen::Index i = 1; i + 1 < n; ++i) slope[i] = van_leer(rho[i] - rho[i - 1], rho[i + 1] - rho[i]);
  Vector flux = Vector::Zero(n + 1);
  for (Eigen::Index f = 0; f + 1 < n; ++f) {
    const double left = rho[f] + 0.5 * slope[f];
    const double right = rho[f + 1] - 0.5 * slope[f + 1];
    flux[f + 1] = u[f] > 0.0 ? u[f] * left : u[f] * right;
  }
  return -(flux.tail(n) - flux.head(n)) / dx;
}

Vector clip_and_restore(Vector v, double mass, double dx) {
  bool clipped = false;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] < 0.0) {
      v[i] = 0.0;
      clipped = true;
    }
  if (clipped) {
    const double m = v.sum() * dx;
    if (m > 0.0) v *= mass / m;
  }
  return v;
}

}  // namespace

Vector face_velocity(const GridDensity1D& rho, const Potential& potential, const Kernel& kernel,
                     ConvolutionMethod method) {
  const auto& grid = rho.grid();
  return face_velocity_values(rho.values(), grid, potential_slope(potential, grid.centers()), kernel, method);
}

double cfl_limit(const GridDensity1D& rho, const Potential& potential, const Kernel& kernel, ConvolutionMethod method) {
  const double umax = face_velocity(rho, potential, kernel, method).cwiseAbs().maxCoeff();
  return umax > 0.0 ? 0.5 * rho.grid().spacing() / umax : std::numeric_limits<double>::infinity();
}

GridDensity1D pde_step(const GridDensity1D& rho, const Potential& potential, const Kernel& kernel, double dt,
                       const PdeOptions& options) {
  require(dt > 0.0 && std::isfinite(dt), "PDE step needs dt > 0");
  const auto& grid = rho.grid();
  const double dx = grid.spacing();
  const Vector vs = potential_slope(potential, grid.centers());
  const Vector u0 = face_velocity_values(rho.values(), grid, vs, kernel, options.convolution);
  const double umax = u0.cwiseAbs().maxCoeff();
  if (dt * umax > 0.5 * dx * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "CFL violation: dt = " << dt << " exceeds the admissible " << 0.5 * dx / umax;
    throw PreconditionError(msg.str());
  }
  const double mass = rho.mass();
  Vector next = rho.values() + dt * flux_divergence(rho.values(), u0, dx, options.scheme);
  if (options.scheme == FluxScheme::muscl) {
    next = clip_and_restore(std::move(next), mass, dx);
    const Vector u1 = face_velocity_values(next, grid, vs, kernel, options.convolution);
    const Vector stage = next + dt * flux_divergence(next, u1, dx, options.scheme);
    next = 0.5 * (rho.values() + stage);
  }
  next = clip_and_restore(std::move(next), mass, dx);
  if (!next.allFinite()) throw NumericError("PDE step produced non-finite values");
  return GridDensity1D(grid, std::move(next), rho.target_mass());
}

PdeRun run_pde(const GridDensity1D& rho0, const GridDensity1D& rho_inf, const Potential& potential,
               const Kernel& kernel, double dt, double t_max, const PdeOptions& options, int stride) {
  require(dt > 0.0 && t_max >= 0.0, "PDE run needs dt > 0 and t_max >= 0");
  require(rho0.grid() == rho_inf.grid(), "grid mismatch");
  PdeRun run;
  run.dt = dt;
  GridDensity1D rho = rho0;
  const double m0 = rho0.mass();
  auto record = [&](double t) {
    run.diagnostics.times.push_back(t);
    run.diagnostics.kl.push_back(kl_divergence(rho, rho_inf));
    run.diagnostics.dissipation.push_back(stein_dissipation(rho, potential, kernel, options.convolution).value);
    run.diagnostics.mass.push_back(rho.mass());
    run.diagnostics.second_moment.push_back(moment(rho, 2.0));
    run.max_mass_drift = std::max(run.max_mass_drift, std::abs(rho.mass() - m0));
  };
  record(0.0);
  run.snapshot_times.push_back(0.0);
  run.snapshots.push_back(rho);

  double t = 0.0;
  long step = 0;
  double err_sum = 0.0;
  while (t < t_max - 1e-12 * std::max(1.0, t_max)) {
    const double h = std::min(dt, t_max - t);
    rho = pde_step(rho, potential, kernel, h, options);
    t = (t_max - t - h) <= 1e-12 * std::max(1.0, t_max) ? t_max : t + h;
    ++step;
    record(t);
    const auto k = run.diagnostics.kl.size() - 1;
    const double dkl = run.diagnostics.kl[k] - run.diagnostics.kl[k - 1];
    const double err = std::abs(dkl / h + 0.5 * (run.diagnostics.dissipation[k] + run.diagnostics.dissipation[k - 1]));
    run.max_balance_error = std::max(run.max_balance_error, err);
    err_sum += err;
    run.max_kl_increase = std::max(run.max_kl_increase, dkl);
    const bool last = t >= t_max;
    if (last || (stride > 0 && step % stride == 0)) {
      run.snapshot_times.push_back(t);
      run.snapshots.push_back(rho);
    }
  }
  if (step > 0) run.mean_balance_error = err_sum / static_cast<double>(step);
  else run.max_kl_increase = 0.0;
  return run;
}

double q_functional(const GridField1D& phi, const TargetDensity& target) {
  const auto& grid = phi.grid();
  Vector xi(1);
  double s = 0.0;
  for (Eigen::Index i = 0; i < grid.cells; ++i) {
    xi[0] = grid.center(i);
    s += target.density(xi) * phi.values()[i] * phi.values()[i];
  }
  return std::sqrt(s * grid.spacing());
}

CancellationResult cancellation_residual(const GridField1D& phi, const TargetDensity& target, const Kernel& kernel,
                                         ConvolutionMethod method) {
  require(target.domain().dim() == 1, "cancellation check needs a one-dimensional target");
  const auto& grid = phi.grid();
  const double dx = grid.spacing();
  const Vector x = grid.centers();
  const Vector vs = potential_slope(target.potential(), x);
  Vector rho(x.size());
  Vector xi(1);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xi[0] = x[i];
    rho[i] = target.density(xi);
  }
  const Vector drho = -vs.cwiseProduct(rho);
  const Vector& p = phi.values();
  const Vector a = drho.cwiseProduct(p);
  const Vector b = rho.cwiseProduct(p);
  const KernelFunctions kf{kernel};
  auto k0 = [&](double r) { return kf.value(r); };
  auto k1 = [&](double r) { return kf.slope(r); };
  auto k2 = [&](double r) { return kf.curvature(r); };

  const Vector weight = p.cwiseProduct(rho);
  const Vector terms[4] = {
      grid_convolve(a, dx, k1, 0.0, method),
      -grid_convolve(a, dx, k0, 0.0, method).cwiseProduct(vs),
      -grid_convolve(b, dx, k2, 0.0, method),
      grid_convolve(b, dx, k1, 0.0, method).cwiseProduct(vs),
  };
  CancellationResult out;
  for (const auto& term : terms) {
    out.lhs += term.dot(weight) * dx;
    out.scale += term.cwiseProduct(weight).cwiseAbs().sum() * dx;
  }
  const Vector g = central_difference(p, dx, 4).cwiseProduct(rho);
  const Vector kg = grid_convolve(g, dx, k0, 0.0, method);
  out.rhs = kg.dot(g) * dx;
  out.scale += kg.cwiseProduct(g).cwiseAbs().sum() * dx;
  out.residual = std::abs(out.lhs - out.rhs);
  return out;
}

LinearizationReport kl_linearization_residual(const GridField1D& h, const TargetDensity& target,
                                              const std::vector<double>& eps_list) {
  require(!eps_list.empty(), "need at least one epsilon");
  const auto& grid = h.grid();
  const double dx = grid.spacing();
  const GridDensity1D rho_inf = target_on_grid(target, grid);
  const Vector& r = rho_inf.values();
  const Vector& hv = h.values();
  require(std::abs(hv.sum() * dx) <= 1e-10, "perturbation must have zero integral");

  double worst = 0.0;
  for (double e : eps_list)
    if ((r + e * hv).minCoeff() < 0.0) worst = std::max(worst, std::abs(e));
  if (worst > 0.0) {
    std::ostringstream msg;
    msg << "rho_inf + eps h is negative for eps = " << worst;
    throw PreconditionError(msg.str());
  }

  double quad = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i)
    if (r[i] > 0.0) quad += hv[i] * hv[i] / (2.0 * r[i]);
  quad *= dx;

  LinearizationReport rep;
  std::vector<double> le, lr;
  for (double e : eps_list) {
    Vector pert = r + e * hv;
    const double m = pert.sum() * dx;
    const double kl = kl_divergence(GridDensity1D(grid, std::move(pert), m), rho_inf);
    rep.eps.push_back(e);
    rep.kl.push_back(kl);
    rep.quadratic.push_back(e * e * quad);
    rep.residual.push_back(std::abs(kl - e * e * quad));
    if (rep.residual.back() > 0.0 && e > 0.0) {
      le.push_back(std::log(e));
      lr.push_back(std::log(rep.residual.back()));
    }
  }
  if (le.size() >= 2) {
    const double n = static_cast<double>(le.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < le.size(); ++i) {
      mx += le[i] / n;
      my += lr[i] / n;
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < le.size(); ++i) {
      sxy += (le[i] - mx) * (lr[i] - my);
      sxx += (le[i] - mx) * (le[i] - mx);
    }
    rep.fitted_order = sxy / sxx;
  } else {
    rep.fitted_order = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

}  // namespace steinlab
