#pragma once

#include "steinlab/measures.hpp"
#include "steinlab/models.hpp"

#include <string>
#include <vector>

namespace steinlab {

enum class Integrator { euler, rk4 };

std::string to_string(Integrator method);
/// Accepts "euler" and "rk4"; throws ConfigError otherwise.
Integrator parse_integrator(const std::string& name);

/// Particle positions sampled along an integration.
struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<ParticleEnsemble> snapshots;
  double dt = 0.0;
  Integrator method = Integrator::rk4;
};

/// Thrown by `integrate` when max |x_i| exceeds 1e6; carries the partial record.
class TrajectoryBlowUp : public NumericError {
 public:
  explicit TrajectoryBlowUp(TrajectoryRecord partial)
      : NumericError("trajectory blow-up"), partial_(std::move(partial)) {}
  const TrajectoryRecord& partial() const { return partial_; }

 private:
  TrajectoryRecord partial_;
};

inline constexpr double kBlowUpRadius = 1e6;

/// -sum_j w_j [grad K(q - y_j) + K(q - y_j) grad V(y_j)] at every column q of
/// `queries`, for sources y_j with weights w_j. Each query sums its sources in
/// index order with Kahan compensation, so the result does not depend on the
/// worker count. Throws NumericError naming the first non-finite query.
PointCloud transport_field(const PointCloud& sources, const Vector& weights, const Potential& potential,
                           const Kernel& kernel, const PointCloud& queries);

/// The particle velocity at `query`: -(1/N) sum_j [grad K(q - x_j) + K(q - x_j) grad V(x_j)].
Vector svgd_velocity(const ParticleEnsemble& ensemble, const Potential& potential, const Kernel& kernel,
                     const VectorRef& query);

/// Velocities of all particles of the ensemble (d x N).
PointCloud svgd_velocities(const ParticleEnsemble& ensemble, const Potential& potential, const Kernel& kernel);

/// One explicit step x_i <- x_i + eps v(x_i) of the discrete algorithm.
ParticleEnsemble euler_step(const ParticleEnsemble& ensemble, const Potential& potential, const Kernel& kernel,
                            double eps);

/// Integrates the particle system from t0 to t1 with step dt (the final step is
/// shortened). A snapshot is stored every `stride` steps and at t1.
TrajectoryRecord integrate(const ParticleEnsemble& ensemble, const Potential& potential, const Kernel& kernel,
                           double t0, double t1, double dt, Integrator method = Integrator::rk4, int stride = 1);

/// A time-indexed signed measure: moving atoms (snapshots with fixed weights)
/// plus a static part. Between snapshots the moving atoms are either frozen at
/// the left snapshot or interpolated by cubic Hermite splines through stored
/// positions and velocities.
class MeasurePath {
 public:
  enum class Interpolation { piecewise_constant, hermite };

  MeasurePath(std::vector<double> times, std::vector<PointCloud> positions, Vector moving_weights,
              SignedDiscreteMeasure fixed, Interpolation interpolation = Interpolation::piecewise_constant,
              std::vector<PointCloud> velocities = {});

  /// The zero measure on [t0, t1] in dimension d.
  static MeasurePath zero(Eigen::Index dim, double t0, double t1);

  /// rho^N_s - `fixed` along a recorded trajectory. Hermite interpolation
  /// recomputes particle velocities at every snapshot.
  static MeasurePath from_trajectory(const TrajectoryRecord& record, const SignedDiscreteMeasure& fixed,
                                     const Potential& potential, const Kernel& kernel,
                                     Interpolation interpolation = Interpolation::piecewise_constant);

  double t_min() const { return times_.front(); }
  double t_max() const { return times_.back(); }
  Eigen::Index dim() const { return fixed_.dim(); }
  Interpolation interpolation() const { return interpolation_; }

  /// Atom positions of the moving part at time s.
  PointCloud moving_at(double s) const;
  const Vector& moving_weights() const { return moving_weights_; }
  const SignedDiscreteMeasure& fixed() const { return fixed_; }
  /// The full measure at time s (not canonicalized).
  SignedDiscreteMeasure at(double s) const;

 private:
  std::vector<double> times_;
  std::vector<PointCloud> positions_;
  std::vector<PointCloud> velocities_;
  Vector moving_weights_;
  SignedDiscreteMeasure fixed_;
  Interpolation interpolation_;
};

/// X_{t,s}(x): integrates d/ds X = -K*(grad mu_s + mu_s grad V)(X) from s = t
/// with X = x, using classical RK4 in s with step dt (last step shortened).
Vector flow_map(const MeasurePath& background, const Potential& potential, const Kernel& kernel, const VectorRef& x,
                double t, double s, double dt);

/// Sup-norm estimates over probe points of |K*(grad mu + mu grad V)|,
/// |grad K*(grad mu + mu grad V)| (Frobenius norm of the Jacobian) and
/// |grad V . K*(grad mu + mu grad V)|.
struct VectorFieldBounds {
  double field = 0.0;
  double jacobian = 0.0;
  double potential_term = 0.0;
};

VectorFieldBounds vector_field_bounds(const SignedDiscreteMeasure& mu, const Potential& potential,
                                      const Kernel& kernel, const PointCloud& probes);

}  // namespace steinlab
