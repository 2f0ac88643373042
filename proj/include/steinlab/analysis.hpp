#pragma once

#include "steinlab/common.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace steinlab {

/// A nonnegative quantity sampled at increasing times, e.g. a distance to the target per snapshot.
struct NormSeries {
  std::vector<double> times;
  std::vector<double> values;
  Eigen::Index particles = 0;  ///< N of the run, 0 if not applicable
  std::map<std::string, std::string> metadata;

  /// Throws PreconditionError unless lengths agree, times increase and values are finite and >= 0.
  void validate() const;
};

/// alpha / (1 - C t alpha) while the denominator is positive; nullopt means blow-up.
std::optional<double> riccati_bound(double alpha, double c, double t);

struct GronwallVerdict {
  bool pass = false;
  double worst_margin = 0.0;  ///< min_k h_k exp(C int_{t_k}^T g) - f_k
  std::size_t worst_index = 0;
};

/// Checks f(t) <= h(t) exp(C int_t^T g) at every sample (trapezoid integral).
/// Requires h nonincreasing and every sample >= 0. Margins down to
/// -1e-12 max(1, bound) count as equality.
GronwallVerdict gronwall_backward_check(const std::vector<double>& times, const std::vector<double>& f,
                                        const std::vector<double>& g, const std::vector<double>& h, double c);

struct StabilityVerdict {
  bool pass = false;
  std::vector<double> bound;       ///< B(t_k), +inf where the denominator is <= 0
  std::vector<bool> in_regime;     ///< denominator >= 1/2
  std::optional<std::size_t> first_violation;
  std::size_t checked = 0;         ///< number of in-regime samples
  double horizon = 0.0;            ///< sqrt(N / (2C)) - 1 (NaN when N is unknown)
  /// Whether the values stayed below sqrt(2/C)/sqrt(N) up to the horizon; only
  /// reported when m0 <= 1/N.
  std::optional<bool> small_start_held;
};

/// B(t) = C (t+1) m0 / (1 - C (t+1) t m0) with m0 = values[0]; passes iff
/// values[k] <= B(t_k) wherever the denominator is at least 1/2.
StabilityVerdict stability_certificate(const NormSeries& series, double c);

struct ScheduleValue {
  std::uint64_t n = 0;
  bool overflow = false;
};

/// ceil(exp(2 C exp(C t))), saturating at 2^63 - 1.
ScheduleValue double_exp_schedule(double c, double t);

/// First time the series exceeds factor * values[0], linearly interpolated;
/// nullopt if it never does. factor must exceed 1.
std::optional<double> fit_departure_time(const NormSeries& series, double factor = 2.0);

/// Smallest C on the grid 1.02^k (k = 0, 1, ...) for which the stability
/// certificate passes on every pilot series; nullopt if none up to 1e6.
std::optional<double> calibrate_stability_constant(const std::vector<NormSeries>& pilot);

/// Smallest C (to 1e-6) with C exp(C exp(C t)) >= max(1, amplification), where
/// amplification is the measured growth of the distance between two ensembles
/// over [0, t].
double calibrate_schedule_constant(double amplification, double t);

struct Spearman {
  double rho = 0.0;
  /// One-sided p-value for an increasing trend, normal approximation z = rho sqrt(n - 1).
  double p_increasing = 1.0;
};

/// Rank correlation with average ranks for ties.
Spearman spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Median of a nonempty sample (mean of the middle pair for even sizes); +inf entries allowed.
double median(std::vector<double> values);

}  // namespace steinlab
