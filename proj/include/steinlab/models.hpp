#pragma once

#include "steinlab/common.hpp"

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace steinlab {

enum class PotentialFamily { zero, quadratic, smoothed_abs, quartic, gaussian_mixture, logistic_posterior, gaussian_posterior };

std::string to_string(PotentialFamily family);

/// Confining potential V of the target density exp(-V)/Z.
///
/// Built-in potentials are nonnegative. `declared_growth()` is the exponent p
/// with V(x) ~ |x|^p at infinity; `dimension()` is 0 when any dimension works.
class Potential {
 public:
  virtual ~Potential() = default;

  virtual double value(const VectorRef& x) const = 0;
  /// Writes grad V(x) into `out` (same length as x). Allocation free.
  virtual void gradient_into(std::span<const double> x, std::span<double> out) const = 0;
  virtual Matrix hessian(const VectorRef& x) const = 0;

  virtual double declared_growth() const = 0;
  virtual PotentialFamily family() const = 0;
  virtual int dimension() const { return 0; }
  virtual std::string id() const = 0;

  Vector gradient(const VectorRef& x) const;
};

/// Translation-invariant interaction kernel K(x - y).
class Kernel {
 public:
  virtual ~Kernel() = default;

  virtual double value(const VectorRef& x) const = 0;
  /// Returns K(x) and writes grad K(x) into `grad`. This is the hot path of the particle system.
  virtual double value_and_gradient(std::span<const double> x, std::span<double> grad) const = 0;
  virtual Matrix hessian(const VectorRef& x) const = 0;
  virtual double laplacian(const VectorRef& x) const = 0;
  virtual Vector grad_laplacian(const VectorRef& x) const = 0;

  virtual double bandwidth() const = 0;
  virtual std::string id() const = 0;
  /// False for kernels that are only piecewise smooth (triangle, box).
  virtual bool smooth() const { return true; }

  Vector gradient(const VectorRef& x) const;
};

using PotentialPtr = std::shared_ptr<const Potential>;
using KernelPtr = std::shared_ptr<const Kernel>;
using ParameterMap = std::map<std::string, std::string>;

PotentialPtr make_zero_potential();
/// V(x) = scale |x|^2 / 2.
PotentialPtr make_quadratic_potential(double scale = 1.0);
/// V(x) = scale (sqrt(1 + |x|^2) - 1); linear growth.
PotentialPtr make_smoothed_abs_potential(double scale = 1.0);
/// V(x) = scale |x|^4.
PotentialPtr make_quartic_potential(double scale = 1.0);
/// V(x) = -log sum_k w_k N(x; m_k, s^2 I), shifted so that min V = 0 on a probe grid.
PotentialPtr make_gaussian_mixture_potential(std::vector<double> weights, std::vector<Vector> means, double sigma);

/// Design matrix for posterior potentials: one row per observation.
struct RegressionData {
  Vector labels;
  Matrix features;
};

/// Reads rows `y, f_1, ..., f_k` separated by commas and/or whitespace. `#` starts a comment.
RegressionData read_regression_data(const std::string& path);

/// Negative log posterior of Bayesian logistic regression with N(0, prior_variance I) prior.
PotentialPtr make_logistic_posterior(RegressionData data, double prior_variance);
/// Negative log posterior of y ~ N(<theta, f>, noise_variance) with N(0, prior_variance I) prior.
PotentialPtr make_gaussian_posterior(RegressionData data, double noise_variance, double prior_variance);

/// exp(-|x|^2 / (2 h^2)).
KernelPtr make_gaussian_kernel(double bandwidth = 1.0);
/// (1 + |x|^2 / h^2)^(-1/2).
KernelPtr make_inverse_multiquadric_kernel(double bandwidth = 1.0);
/// max(0, 1 - |x| / h), one dimensional.
KernelPtr make_triangle_kernel(double bandwidth = 1.0);
/// 1 on |x| <= h and 0 elsewhere; not positive definite.
KernelPtr make_box_kernel(double bandwidth = 1.0);

/// Builds a potential from its string id (`zero`, `quadratic`, `smoothed_abs`, `quartic`,
/// `gaussian_mixture`, `logistic_posterior`, `gaussian_posterior`) and parameters.
PotentialPtr make_potential(const std::string& id, const ParameterMap& params = {});
/// Builds a kernel from its string id (`gaussian`, `imq`, `triangle`, `box`) and parameters.
KernelPtr make_kernel(const std::string& id, const ParameterMap& params = {});

}  // namespace steinlab
