#pragma once

#include "steinlab/common.hpp"
#include "steinlab/models.hpp"
#include "steinlab/rng.hpp"

#include <functional>
#include <iosfwd>
#include <string>

namespace steinlab {

/// N equally weighted particles in R^d; the empirical measure (1/N) sum delta_{x_i}.
class ParticleEnsemble {
 public:
  ParticleEnsemble() = default;
  /// `positions` is d x N. Throws PreconditionError on N == 0 or non-finite entries.
  explicit ParticleEnsemble(PointCloud positions);
  /// Convenience constructor for one-dimensional ensembles.
  static ParticleEnsemble from_values(const std::vector<double>& xs);

  Eigen::Index size() const { return positions_.cols(); }
  Eigen::Index dim() const { return positions_.rows(); }
  const PointCloud& positions() const { return positions_; }
  auto position(Eigen::Index i) const { return positions_.col(i); }
  double weight() const { return 1.0 / static_cast<double>(size()); }

 private:
  PointCloud positions_;
};

/// Finite signed combination of Dirac masses.
///
/// Atoms whose positions agree within `kMergeTolerance` in the sup norm are
/// merged by `canonicalize()`; the positive and negative parts are the atoms
/// with positive and negative weights.
class SignedDiscreteMeasure {
 public:
  static constexpr double kMergeTolerance = 1e-12;

  SignedDiscreteMeasure() = default;
  explicit SignedDiscreteMeasure(Eigen::Index dim) : positions_(dim, 0) {}
  SignedDiscreteMeasure(PointCloud positions, Vector weights);
  static SignedDiscreteMeasure from_ensemble(const ParticleEnsemble& ensemble);
  static SignedDiscreteMeasure dirac(const VectorRef& x, double weight = 1.0);

  Eigen::Index size() const { return weights_.size(); }
  Eigen::Index dim() const { return positions_.rows(); }
  const PointCloud& positions() const { return positions_; }
  const Vector& weights() const { return weights_; }
  double total_mass() const { return weights_.sum(); }
  double total_variation() const { return weights_.cwiseAbs().sum(); }

  /// Sorted lexicographically, near-duplicates merged, exact-zero weights dropped.
  SignedDiscreteMeasure canonicalize() const;
  SignedDiscreteMeasure positive_part() const;
  SignedDiscreteMeasure negative_part() const;
  SignedDiscreteMeasure scaled(double factor) const;

 private:
  PointCloud positions_;
  Vector weights_;
};

/// a - b as a canonical signed measure. Throws PreconditionError on dimension mismatch.
SignedDiscreteMeasure subtract(const SignedDiscreteMeasure& a, const SignedDiscreteMeasure& b);
SignedDiscreteMeasure subtract(const ParticleEnsemble& a, const SignedDiscreteMeasure& b);
SignedDiscreteMeasure subtract(const ParticleEnsemble& a, const ParticleEnsemble& b);
/// Union of supports with concatenated weights, canonicalized.
SignedDiscreteMeasure add(const SignedDiscreteMeasure& a, const SignedDiscreteMeasure& b);

/// Cell-centred uniform grid on [left, right] with n cells.
struct UniformGrid1D {
  double left = 0.0;
  double right = 1.0;
  Eigen::Index cells = 2;

  UniformGrid1D() = default;
  UniformGrid1D(double left, double right, Eigen::Index cells);

  double spacing() const { return (right - left) / static_cast<double>(cells); }
  double center(Eigen::Index i) const { return left + (static_cast<double>(i) + 0.5) * spacing(); }
  Vector centers() const;
  bool operator==(const UniformGrid1D&) const = default;
};

/// Nonnegative cell-averaged density on a uniform grid.
class GridDensity1D {
 public:
  GridDensity1D() = default;
  /// Throws PreconditionError if a value is negative or non-finite, or if the
  /// midpoint mass differs from `target_mass` by more than 1e-8.
  GridDensity1D(UniformGrid1D grid, Vector values, double target_mass = 1.0);
  /// Samples f at the cell centres and rescales to `target_mass`.
  static GridDensity1D from_function(const UniformGrid1D& grid, const std::function<double(double)>& f,
                                     double target_mass = 1.0);

  const UniformGrid1D& grid() const { return grid_; }
  const Vector& values() const { return values_; }
  double mass() const { return values_.sum() * grid_.spacing(); }
  double target_mass() const { return target_mass_; }

 private:
  UniformGrid1D grid_;
  Vector values_;
  double target_mass_ = 1.0;
};

/// Signed values on a uniform grid (test functions, perturbations).
class GridField1D {
 public:
  GridField1D() = default;
  GridField1D(UniformGrid1D grid, Vector values);
  static GridField1D from_function(const UniformGrid1D& grid, const std::function<double(double)>& f);

  const UniformGrid1D& grid() const { return grid_; }
  const Vector& values() const { return values_; }

 private:
  UniformGrid1D grid_;
  Vector values_;
};

/// Axis-aligned box [lower, upper].
struct Box {
  Vector lower;
  Vector upper;
  Eigen::Index dim() const { return lower.size(); }
  static Box cube(Eigen::Index dim, double lo, double hi);
};

/// Trapezoid approximation of the integral of exp(-V) over a box, d <= 2.
///
/// `resolution` is the number of nodes per axis (>= 64). Throws NumericError
/// ("potential overflow") on a non-finite integrand sample and PreconditionError
/// ("unsupported dimension for quadrature") for d > 2.
double compute_Z(const Potential& potential, const Box& domain, Eigen::Index resolution);

/// The normalised target rho_inf = exp(-V) / Z on a truncation box.
class TargetDensity {
 public:
  /// Computes Z by trapezoid quadrature, doubling `resolution` until the
  /// relative change drops below 1e-6. For potentials with positive declared
  /// growth the tail mass outside the box is estimated from a doubled box and
  /// must stay below 1e-8.
  TargetDensity(PotentialPtr potential, Box domain, Eigen::Index resolution = 256);

  const Potential& potential() const { return *potential_; }
  const PotentialPtr& potential_ptr() const { return potential_; }
  const Box& domain() const { return domain_; }
  double Z() const { return z_; }
  Eigen::Index resolution() const { return resolution_; }
  double tail_mass() const { return tail_mass_; }

  double density(const VectorRef& x) const;
  /// grad rho_inf = -rho_inf grad V.
  Vector density_gradient(const VectorRef& x) const;

 private:
  PotentialPtr potential_;
  Box domain_;
  double z_ = 1.0;
  Eigen::Index resolution_ = 0;
  double tail_mass_ = 0.0;
};

/// Smallest symmetric box [-R, R]^d (R on a 0.5 grid) outside of which exp(-V)
/// along the coordinate axes and diagonals is below `threshold`.
Box truncation_box(const Potential& potential, Eigen::Index dim, double threshold = 1e-12);

/// Deterministic quadrature stand-in for rho_inf, d <= 2: trapezoid-weighted
/// nodes with `atoms_per_axis` nodes per axis, weights normalised to sum 1.
SignedDiscreteMeasure quadrature_measure(const TargetDensity& target, Eigen::Index atoms_per_axis);
/// The same on a sub-box of interest, e.g. a window narrower than the truncation box.
SignedDiscreteMeasure quadrature_measure(const TargetDensity& target, Eigen::Index atoms_per_axis, const Box& box);

/// Discretises rho_inf on a cell-centred grid (d = 1), normalised to mass 1.
GridDensity1D target_on_grid(const TargetDensity& target, const UniformGrid1D& grid);

/// I.i.d. draws from rho_inf. d = 1 uses inverse-CDF sampling on a fine grid
/// over the truncation box; d >= 2 uses rejection against a Gaussian envelope.
ParticleEnsemble sample_target(const TargetDensity& target, Eigen::Index n, Philox& rng);

/// I.i.d. draws from N(mean, std^2 I).
ParticleEnsemble sample_gaussian(Eigen::Index n, const Vector& mean, double std_dev, Philox& rng);

/// sum |w_i| |x_i|^p.
double moment(const SignedDiscreteMeasure& measure, double p);
double moment(const ParticleEnsemble& ensemble, double p);
/// sum rho_i |x_i|^p dx.
double moment(const GridDensity1D& density, double p);

// CSV persistence.
void write_csv(std::ostream& out, const SignedDiscreteMeasure& measure);
SignedDiscreteMeasure read_measure_csv(std::istream& in);
void write_csv(std::ostream& out, const GridDensity1D& density);
GridDensity1D read_grid_csv(std::istream& in);

}  // namespace steinlab
