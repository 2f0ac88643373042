#include "steinlab/dynamics.hpp"

#include "steinlab/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace steinlab {

std::string to_string(Integrator method) { return method == Integrator::euler ? "euler" : "rk4"; }

Integrator parse_integrator(const std::string& name) {
  if (name == "euler") return Integrator::euler;
  if (name == "rk4") return Integrator::rk4;
  throw ConfigError("unknown integrator '" + name + "' (expected euler or rk4)");
}

PointCloud transport_field(const PointCloud& sources, const Vector& weights, const Potential& potential,
                           const Kernel& kernel, const PointCloud& queries) {
  const Eigen::Index d = queries.rows();
  const Eigen::Index m = sources.cols();
  require(weights.size() == m, "one weight per source required");
  require(m == 0 || sources.rows() == d, "source and query dimensions differ");
  PointCloud out = PointCloud::Zero(d, queries.cols());
  if (m == 0) return out;

  PointCloud grad_v(d, m);
  for (Eigen::Index j = 0; j < m; ++j)
    potential.gradient_into({sources.col(j).data(), static_cast<std::size_t>(d)},
                            {grad_v.col(j).data(), static_cast<std::size_t>(d)});

  parallel_for(queries.cols(), [&](std::ptrdiff_t begin, std::ptrdiff_t end) {
    std::vector<double> diff(static_cast<std::size_t>(d)), gk(static_cast<std::size_t>(d));
    std::vector<double> sum(static_cast<std::size_t>(d)), comp(static_cast<std::size_t>(d));
    for (std::ptrdiff_t i = begin; i < end; ++i) {
      std::fill(sum.begin(), sum.end(), 0.0);
      std::fill(comp.begin(), comp.end(), 0.0);
      for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index k = 0; k < d; ++k) diff[static_cast<std::size_t>(k)] = queries(k, i) - sources(k, j);
        const double kv = kernel.value_and_gradient(diff, gk);
        const double w = weights[j];
        for (Eigen::Index k = 0; k < d; ++k) {
          const auto kk = static_cast<std::size_t>(k);
          const double term = w * (gk[kk] + kv * grad_v(k, j));
          const double y = term - comp[kk];
          const double t = sum[kk] + y;
          comp[kk] = (t - sum[kk]) - y;
          sum[kk] = t;
        }
      }
      for (Eigen::Index k = 0; k < d; ++k) {
        const double v = -sum[static_cast<std::size_t>(k)];
        if (!std::isfinite(v)) throw NumericError("non-finite velocity at particle " + std::to_string(i));
        out(k, i) = v;
      }
    }
  });
  return out;
}

Vector svgd_velocity(const ParticleEnsemble& ensemble, const Potential& potential, const Kernel& kernel,
                     const VectorRef& query) {
  require(ensemble.size() >= 1, "ensemble must be nonempty");
  PointCloud q = query;
  return transport_field(ensemble.positions(), Vector::Constant(ensemble.size(), ensemble.weight()), potential, kernel, q)
      .col(0);
}

PointCloud svgd_velocities(const ParticleEnsemble& ensemble, const Potential& potential, const Kernel& kernel) {
  return transport_field(ensemble.positions(), Vector::Constant(ensemble.size(), ensemble.weight()), potential, kernel,
                         ensemble.positions());
}

ParticleEnsemble euler_step(const ParticleEnsemble& ensemble, const Potential& potential, const Kernel& kernel,
                            double eps) {
  require(eps >= 0.0 && std::isfinite(eps), "step size must be nonnegative");
  if (eps == 0.0) return ensemble;
  return ParticleEnsemble(ensemble.positions() + eps * svgd_velocities(ensemble, potential, kernel));
}

namespace {

PointCloud velocities_of(const PointCloud& x, const Vector& weights, const Potential& potential, const Kernel& kernel) {
  return transport_field(x, weights, potential, kernel, x);
}

PointCloud advance(const PointCloud& x, const Vector& weights, const Potential& potential, const Kernel& kernel,
                   double h, Integrator method) {
  const PointCloud k1 = velocities_of(x, weights, potential, kernel);
  if (method == Integrator::euler) return x + h * k1;
  const PointCloud k2 = velocities_of(x + 0.5 * h * k1, weights, potential, kernel);
  const PointCloud k3 = velocities_of(x + 0.5 * h * k2, weights, potential, kernel);
  const PointCloud k4 = velocities_of(x + h * k3, weights, potential, kernel);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Step boundaries t0, t0 + dt, ..., t1 with a shortened final step.
std::vector<double> step_times(double t0, double t1, double dt) {
  std::vector<double> times{t0};
  const double span = t1 - t0;
  const auto full = static_cast<long long>(std::floor(span / dt + 1e-9));
  for (long long k = 1; k <= full; ++k) times.push_back(t0 + static_cast<double>(k) * dt);
  if (t1 - times.back() > 1e-12 * std::max(1.0, std::abs(t1))) times.push_back(t1);
  else times.back() = t1;
  return times;
}

}  // namespace

TrajectoryRecord integrate(const ParticleEnsemble& ensemble, const Potential& potential, const Kernel& kernel,
                           double t0, double t1, double dt, Integrator method, int stride) {
  require(std::isfinite(t0) && std::isfinite(t1) && t1 >= t0, "integration needs t1 >= t0");
  require(dt > 0.0 && std::isfinite(dt), "integration needs dt > 0");
  require(stride >= 1, "snapshot stride must be positive");

  TrajectoryRecord record;
  record.dt = dt;
  record.method = method;
  record.times.push_back(t0);
  record.snapshots.push_back(ensemble);
  if (t1 == t0) return record;

  const std::vector<double> times = step_times(t0, t1, dt);
  const Vector weights = Vector::Constant(ensemble.size(), ensemble.weight());
  PointCloud x = ensemble.positions();
  for (std::size_t k = 1; k < times.size(); ++k) {
    x = advance(x, weights, potential, kernel, times[k] - times[k - 1], method);
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kBlowUpRadius) throw TrajectoryBlowUp(record);
    if (k % static_cast<std::size_t>(stride) == 0 || k + 1 == times.size()) {
      record.times.push_back(times[k]);
      record.snapshots.emplace_back(x);
    }
  }
  return record;
}

// --- MeasurePath -------------------------------------------------------------

MeasurePath::MeasurePath(std::vector<double> times, std::vector<PointCloud> positions, Vector moving_weights,
                         SignedDiscreteMeasure fixed, Interpolation interpolation, std::vector<PointCloud> velocities)
    : times_(std::move(times)),
      positions_(std::move(positions)),
      velocities_(std::move(velocities)),
      moving_weights_(std::move(moving_weights)),
      fixed_(std::move(fixed)),
      interpolation_(interpolation) {
  require(!times_.empty(), "measure path needs at least one time");
  require(times_.size() == positions_.size(), "one position snapshot per time required");
  for (std::size_t k = 1; k < times_.size(); ++k) require(times_[k] > times_[k - 1], "path times must increase");
  for (const auto& p : positions_) {
    require(p.cols() == moving_weights_.size(), "snapshot atom count must match the weights");
    require(p.rows() == fixed_.dim(), "snapshot dimension must match the static part");
  }
  if (interpolation_ == Interpolation::hermite)
    require(velocities_.size() == positions_.size(), "hermite interpolation needs velocities at every snapshot");
}

MeasurePath MeasurePath::zero(Eigen::Index dim, double t0, double t1) {
  std::vector<double> times{t0};
  if (t1 > t0) times.push_back(t1);
  std::vector<PointCloud> pos(times.size(), PointCloud(dim, 0));
  return MeasurePath(times, pos, Vector(0), SignedDiscreteMeasure(dim));
}

MeasurePath MeasurePath::from_trajectory(const TrajectoryRecord& record, const SignedDiscreteMeasure& fixed,
                                         const Potential& potential, const Kernel& kernel,
                                         Interpolation interpolation) {
  require(!record.snapshots.empty(), "trajectory has no snapshots");
  std::vector<PointCloud> pos, vel;
  for (const auto& snap : record.snapshots) {
    pos.push_back(snap.positions());
    if (interpolation == Interpolation::hermite) vel.push_back(svgd_velocities(snap, potential, kernel));
  }
  const auto& first = record.snapshots.front();
  SignedDiscreteMeasure negated = fixed.size() == 0 ? SignedDiscreteMeasure(first.dim()) : fixed.scaled(-1.0);
  return MeasurePath(record.times, std::move(pos), Vector::Constant(first.size(), first.weight()), std::move(negated),
                     interpolation, std::move(vel));
}

PointCloud MeasurePath::moving_at(double s) const {
  const double tol = 1e-12 * std::max(1.0, std::abs(t_max()));
  require(s >= t_min() - tol && s <= t_max() + tol, "time outside the stored background path");
  if (times_.size() == 1 || s >= t_max()) return positions_.back();
  const auto it = std::upper_bound(times_.begin(), times_.end(), s);
  const auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, std::distance(times_.begin(), it) - 1));
  if (interpolation_ == Interpolation::piecewise_constant) return positions_[k];
  const double h = times_[k + 1] - times_[k];
  const double tau = (s - times_[k]) / h;
  const double t2 = tau * tau, t3 = t2 * tau;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + tau, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * positions_[k] + (h10 * h) * velocities_[k] + h01 * positions_[k + 1] + (h11 * h) * velocities_[k + 1];
}

SignedDiscreteMeasure MeasurePath::at(double s) const {
  SignedDiscreteMeasure moving(moving_at(s), moving_weights_);
  if (fixed_.size() == 0) return moving;
  if (moving.size() == 0) return fixed_;
  PointCloud p(dim(), moving.size() + fixed_.size());
  p << moving.positions(), fixed_.positions();
  Vector w(p.cols());
  w << moving.weights(), fixed_.weights();
  return SignedDiscreteMeasure(std::move(p), std::move(w));
}

Vector flow_map(const MeasurePath& background, const Potential& potential, const Kernel& kernel, const VectorRef& x,
                double t, double s, double dt) {
  require(dt > 0.0, "flow map needs dt > 0");
  require(x.size() == background.dim(), "point dimension does not match the background");
  const double lo = std::min(t, s), hi = std::max(t, s);
  const double tol = 1e-12 * std::max(1.0, std::abs(background.t_max()));
  require(lo >= background.t_min() - tol && hi <= background.t_max() + tol,
          "background measures must cover [min(t,s), max(t,s)]");
  if (s == t) return x;

  auto field = [&](const Vector& y, double u) -> Vector {
    PointCloud q = y;
    Vector v = transport_field(background.moving_at(u), background.moving_weights(), potential, kernel, q).col(0);
    const auto& fixed = background.fixed();
    if (fixed.size() > 0) v += transport_field(fixed.positions(), fixed.weights(), potential, kernel, q).col(0);
    return v;
  };

  const double direction = s > t ? 1.0 : -1.0;
  const std::vector<double> grid = step_times(0.0, hi - lo, dt);
  Vector y = x;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double u = t + direction * grid[k - 1];
    const double h = direction * (grid[k] - grid[k - 1]);
    const Vector k1 = field(y, u);
    const Vector k2 = field(y + 0.5 * h * k1, u + 0.5 * h);
    const Vector k3 = field(y + 0.5 * h * k2, u + 0.5 * h);
    const Vector k4 = field(y + h * k3, u + h);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!y.allFinite() || y.cwiseAbs().maxCoeff() > kBlowUpRadius) throw NumericError("trajectory blow-up");
  }
  return y;
}

VectorFieldBounds vector_field_bounds(const SignedDiscreteMeasure& mu, const Potential& potential,
                                      const Kernel& kernel, const PointCloud& probes) {
  require(probes.cols() >= 1, "probe grid must be nonempty");
  require(mu.size() == 0 || mu.dim() == probes.rows(), "measure and probe dimensions differ");
  const Eigen::Index d = probes.rows();
  VectorFieldBounds out;
  PointCloud grad_v(d, mu.size());
  for (Eigen::Index j = 0; j < mu.size(); ++j) grad_v.col(j) = potential.gradient(mu.positions().col(j));

  Vector diff(d), gk(d);
  for (Eigen::Index i = 0; i < probes.cols(); ++i) {
    Vector f = Vector::Zero(d);
    Matrix jac = Matrix::Zero(d, d);
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
      diff = probes.col(i) - mu.positions().col(j);
      const double kv = kernel.value_and_gradient({diff.data(), static_cast<std::size_t>(d)},
                                                  {gk.data(), static_cast<std::size_t>(d)});
      const double w = mu.weights()[j];
      f += w * (gk + kv * grad_v.col(j));
      jac += w * (kernel.hessian(diff) + grad_v.col(j) * gk.transpose());
    }
    out.field = std::max(out.field, f.norm());
    out.jacobian = std::max(out.jacobian, jac.norm());
    out.potential_term = std::max(out.potential_term, std::abs(potential.gradient(probes.col(i)).dot(f)));
  }
  return out;
}

}  // namespace steinlab
