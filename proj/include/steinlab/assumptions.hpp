#pragma once

#include "steinlab/models.hpp"

#include <optional>
#include <string>
#include <vector>

namespace steinlab {

/// A measured quantity at a probe point.
struct Witness {
  std::string label;
  Vector point;
  double value = 0.0;
};

/// Verdict of a probe-based assumption check. Every report carries at least one witness.
struct AssumptionReport {
  std::string name;
  bool pass = false;
  std::vector<Witness> witnesses;
  /// Description of the probes used ("probe-based: ...").
  std::string probes;
};

/// Growth check for V on rays from the origin.
///
/// Fits the slope of log V against log |x| on every ray (coordinate axes and
/// the main diagonal) over the outer half of the probe radii. Passes iff every
/// slope is within 0.2 of the declared exponent and the sandwich
/// (|x|^p - 1)/C <= V(x) <= C(|x|^p + 1) holds with C <= 1e6 at all probes.
/// `declared` overrides the potential's own growth exponent.
AssumptionReport check_growth(const Potential& potential, const std::vector<double>& probe_radii, Eigen::Index dim = 1,
                              std::optional<double> declared = std::nullopt);

/// Probe grid for the growth-at-infinity condition on V and K.
struct B3ProbeGrid {
  double max_radius = 25.0;  ///< x probes at +-r along the first axis, r = 0, step, ..., max_radius
  double radius_step = 0.5;
  double y_halfwidth = 12.0;  ///< y ranges over x +- y_halfwidth (in units of the kernel bandwidth)
  double y_spacing = 0.01;
  Eigen::Index dim = 1;
};

/// For each probe x, estimates the BL norm in y (sup plus largest finite-difference
/// slope) of g1(y) = grad V(x) . grad K(x - y) / (1 + V(y)) and
/// g2(y) = grad V(x) . grad V(y) K(x - y) / (1 + V(y)).
/// Fails if a value is non-finite or if log-norm against log-radius has slope
/// above 0.25 over the outer half of the radii.
AssumptionReport check_condition_B3(const Potential& potential, const Kernel& kernel, const B3ProbeGrid& grid = {});

/// Bochner check in 1-D: samples K periodically and symmetrically on n points
/// (n a power of two >= 256) with spacing h / 16 and inspects the DFT.
/// Passes iff min Re >= -1e-8 max and max |Im| <= 1e-8 max.
AssumptionReport check_positive_definite(const Kernel& kernel, Eigen::Index n = 1024, double spacing = 0.0);

}  // namespace steinlab
