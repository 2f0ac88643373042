#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace steinlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Column-major point cloud: one column per point, one row per coordinate.
using PointCloud = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;

using VectorRef = Eigen::Ref<const Vector>;

/// Raised when a numeric routine produces non-finite output or diverges.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on malformed configuration or input files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a documented precondition of an operation is violated.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw PreconditionError(message);
}

}  // namespace steinlab
