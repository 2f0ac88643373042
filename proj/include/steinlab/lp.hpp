#pragma once

#include "steinlab/common.hpp"

#include <string>

namespace steinlab {

/// Result of `simplex_maximize`.
struct SimplexResult {
  Vector x;
  double value = 0.0;
  bool optimal = false;  ///< false when the iteration limit was hit
  long iterations = 0;
};

/// Dense tableau simplex with Bland's rule for
///   maximize c.x  subject to  A x <= b, x >= 0,
/// with b >= 0 so that the slack basis is feasible. Throws NumericError if the
/// problem is unbounded.
SimplexResult simplex_maximize(const Matrix& a, const Vector& b, const Vector& c, long max_iterations = 200000);

/// Minimum-cost perfect matching of a square cost matrix (shortest augmenting
/// paths with potentials, O(n^3)). Returns the column assigned to each row.
std::vector<Eigen::Index> solve_assignment(const Matrix& cost);

}  // namespace steinlab
