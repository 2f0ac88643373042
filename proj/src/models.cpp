#include "steinlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace steinlab {

std::string to_string(PotentialFamily family) {
  switch (family) {
    case PotentialFamily::zero: return "zero";
    case PotentialFamily::quadratic: return "quadratic";
    case PotentialFamily::smoothed_abs: return "smoothed_abs";
    case PotentialFamily::quartic: return "quartic";
    case PotentialFamily::gaussian_mixture: return "gaussian_mixture";
    case PotentialFamily::logistic_posterior: return "logistic_posterior";
    case PotentialFamily::gaussian_posterior: return "gaussian_posterior";
  }
  return "unknown";
}

Vector Potential::gradient(const VectorRef& x) const {
  Vector g(x.size());
  gradient_into(std::span<const double>(x.data(), x.size()), std::span<double>(g.data(), g.size()));
  return g;
}

Vector Kernel::gradient(const VectorRef& x) const {
  Vector g(x.size());
  value_and_gradient(std::span<const double>(x.data(), x.size()), std::span<double>(g.data(), g.size()));
  return g;
}

namespace {

double squared_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

class ZeroPotential final : public Potential {
 public:
  double value(const VectorRef&) const override { return 0.0; }
  void gradient_into(std::span<const double>, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
  }
  Matrix hessian(const VectorRef& x) const override { return Matrix::Zero(x.size(), x.size()); }
  double declared_growth() const override { return 0.0; }
  PotentialFamily family() const override { return PotentialFamily::zero; }
  std::string id() const override { return "zero"; }
};

class QuadraticPotential final : public Potential {
 public:
  explicit QuadraticPotential(double scale) : scale_(scale) {}
  double value(const VectorRef& x) const override { return 0.5 * scale_ * x.squaredNorm(); }
  void gradient_into(std::span<const double> x, std::span<double> out) const override {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = scale_ * x[i];
  }
  Matrix hessian(const VectorRef& x) const override {
    return scale_ * Matrix::Identity(x.size(), x.size());
  }
  double declared_growth() const override { return 2.0; }
  PotentialFamily family() const override { return PotentialFamily::quadratic; }
  std::string id() const override { return "quadratic"; }

 private:
  double scale_;
};

class SmoothedAbsPotential final : public Potential {
 public:
  explicit SmoothedAbsPotential(double scale) : scale_(scale) {}
  double value(const VectorRef& x) const override {
    return scale_ * (std::sqrt(1.0 + x.squaredNorm()) - 1.0);
  }
  void gradient_into(std::span<const double> x, std::span<double> out) const override {
    const double root = std::sqrt(1.0 + squared_norm(x));
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = scale_ * x[i] / root;
  }
  Matrix hessian(const VectorRef& x) const override {
    const double root = std::sqrt(1.0 + x.squaredNorm());
    const Index n = x.size();
    return scale_ * (Matrix::Identity(n, n) / root - x * x.transpose() / (root * root * root));
  }
  double declared_growth() const override { return 1.0; }
  PotentialFamily family() const override { return PotentialFamily::smoothed_abs; }
  std::string id() const override { return "smoothed_abs"; }

 private:
  using Index = Eigen::Index;
  double scale_;
};

class QuarticPotential final : public Potential {
 public:
  explicit QuarticPotential(double scale) : scale_(scale) {}
  double value(const VectorRef& x) const override {
    const double r2 = x.squaredNorm();
    return scale_ * r2 * r2;
  }
  void gradient_into(std::span<const double> x, std::span<double> out) const override {
    const double r2 = squared_norm(x);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = 4.0 * scale_ * r2 * x[i];
  }
  Matrix hessian(const VectorRef& x) const override {
    const double r2 = x.squaredNorm();
    return scale_ * (4.0 * r2 * Matrix::Identity(x.size(), x.size()) + 8.0 * x * x.transpose());
  }
  double declared_growth() const override { return 4.0; }
  PotentialFamily family() const override { return PotentialFamily::quartic; }
  std::string id() const override { return "quartic"; }

 private:
  double scale_;
};

class GaussianMixturePotential final : public Potential {
 public:
  GaussianMixturePotential(std::vector<double> weights, std::vector<Vector> means, double sigma)
      : log_weights_(weights.size()), means_(std::move(means)), sigma_(sigma) {
    require(!weights.empty() && weights.size() == means_.size(), "gaussian mixture needs matching weights and means");
    require(sigma > 0.0, "gaussian mixture sigma must be positive");
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (std::size_t k = 0; k < weights.size(); ++k) {
      require(weights[k] > 0.0, "gaussian mixture weights must be positive");
      log_weights_[k] = std::log(weights[k] / total);
    }
    dim_ = static_cast<int>(means_.front().size());
    for (const auto& m : means_) require(m.size() == dim_, "gaussian mixture means must share a dimension");
    shift_ = 0.0;
    shift_ = locate_minimum();
  }

  double value(const VectorRef& x) const override { return raw_value(x) - shift_; }

  void gradient_into(std::span<const double> x, std::span<double> out) const override {
    Eigen::Map<const Vector> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    const Vector r = responsibilities(xv);
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t k = 0; k < means_.size(); ++k)
      for (std::size_t i = 0; i < x.size(); ++i) out[i] += r[k] * (x[i] - means_[k][i]) / (sigma_ * sigma_);
  }

  Matrix hessian(const VectorRef& x) const override {
    const Vector r = responsibilities(x);
    const Eigen::Index d = x.size();
    Vector mean_dev = Vector::Zero(d);
    Matrix second = Matrix::Zero(d, d);
    for (std::size_t k = 0; k < means_.size(); ++k) {
      const Vector dev = x - means_[k];
      mean_dev += r[k] * dev;
      second += r[k] * dev * dev.transpose();
    }
    const double s2 = sigma_ * sigma_;
    return Matrix::Identity(d, d) / s2 - (second - mean_dev * mean_dev.transpose()) / (s2 * s2);
  }

  double declared_growth() const override { return 2.0; }
  PotentialFamily family() const override { return PotentialFamily::gaussian_mixture; }
  int dimension() const override { return dim_; }
  std::string id() const override { return "gaussian_mixture"; }

 private:
  Vector log_terms(const VectorRef& x) const {
    Vector terms(means_.size());
    for (std::size_t k = 0; k < means_.size(); ++k)
      terms[k] = log_weights_[k] - (x - means_[k]).squaredNorm() / (2.0 * sigma_ * sigma_);
    return terms;
  }

  double raw_value(const VectorRef& x) const {
    const Vector terms = log_terms(x);
    const double top = terms.maxCoeff();
    return -(top + std::log((terms.array() - top).exp().sum()));
  }

  Vector responsibilities(const VectorRef& x) const {
    Vector terms = log_terms(x);
    const double top = terms.maxCoeff();
    terms = (terms.array() - top).exp();
    return terms / terms.sum();
  }

  // Coarse search over the means and a grid around them, then gradient descent.
  double locate_minimum() const {
    Vector best = means_.front();
    double best_value = raw_value(best);
    auto consider = [&](const Vector& p) {
      const double v = raw_value(p);
      if (v < best_value) {
        best_value = v;
        best = p;
      }
    };
    for (const auto& m : means_) consider(m);
    if (dim_ == 1) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const auto& m : means_) {
        lo = std::min(lo, m[0] - 4.0 * sigma_);
        hi = std::max(hi, m[0] + 4.0 * sigma_);
      }
      for (int i = 0; i <= 400; ++i) consider(Vector::Constant(1, lo + (hi - lo) * i / 400.0));
    }
    Vector x = best;
    const double step = 0.5 * sigma_ * sigma_;
    for (int it = 0; it < 500; ++it) {
      Vector g = gradient(x);
      x -= step * g;
      consider(x);
    }
    return best_value;
  }

  std::vector<double> log_weights_;
  std::vector<Vector> means_;
  double sigma_;
  int dim_ = 1;
  double shift_ = 0.0;
};

double softplus(double a) { return a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a)); }
double sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

class LogisticPosterior final : public Potential {
 public:
  LogisticPosterior(RegressionData data, double prior_variance)
      : data_(std::move(data)), prior_variance_(prior_variance) {
    require(prior_variance > 0.0, "prior variance must be positive");
  }

  double value(const VectorRef& theta) const override {
    check_dim(theta.size());
    double v = theta.squaredNorm() / (2.0 * prior_variance_);
    for (Eigen::Index k = 0; k < data_.features.rows(); ++k) {
      const double a = data_.features.row(k).dot(theta);
      v += softplus(a) - data_.labels[k] * a;
    }
    return v;
  }

  void gradient_into(std::span<const double> x, std::span<double> out) const override {
    check_dim(static_cast<Eigen::Index>(x.size()));
    Eigen::Map<const Vector> theta(x.data(), static_cast<Eigen::Index>(x.size()));
    Eigen::Map<Vector> g(out.data(), static_cast<Eigen::Index>(out.size()));
    g = theta / prior_variance_;
    for (Eigen::Index k = 0; k < data_.features.rows(); ++k) {
      const double a = data_.features.row(k).dot(theta);
      g += (sigmoid(a) - data_.labels[k]) * data_.features.row(k).transpose();
    }
  }

  Matrix hessian(const VectorRef& theta) const override {
    const Eigen::Index d = theta.size();
    Matrix h = Matrix::Identity(d, d) / prior_variance_;
    for (Eigen::Index k = 0; k < data_.features.rows(); ++k) {
      const double s = sigmoid(data_.features.row(k).dot(theta));
      h += s * (1.0 - s) * data_.features.row(k).transpose() * data_.features.row(k);
    }
    return h;
  }

  double declared_growth() const override { return 2.0; }
  PotentialFamily family() const override { return PotentialFamily::logistic_posterior; }
  int dimension() const override { return static_cast<int>(data_.features.cols()); }
  std::string id() const override { return "logistic_posterior"; }

 private:
  void check_dim(Eigen::Index d) const {
    if (d != data_.features.cols()) throw PreconditionError("parameter dimension does not match design matrix");
  }
  RegressionData data_;
  double prior_variance_;
};

class GaussianPosterior final : public Potential {
 public:
  GaussianPosterior(RegressionData data, double noise_variance, double prior_variance)
      : data_(std::move(data)), noise_variance_(noise_variance), prior_variance_(prior_variance) {
    require(noise_variance > 0.0 && prior_variance > 0.0, "variances must be positive");
  }

  double value(const VectorRef& theta) const override {
    const Vector residual = data_.labels - data_.features * theta;
    return residual.squaredNorm() / (2.0 * noise_variance_) + theta.squaredNorm() / (2.0 * prior_variance_);
  }

  void gradient_into(std::span<const double> x, std::span<double> out) const override {
    Eigen::Map<const Vector> theta(x.data(), static_cast<Eigen::Index>(x.size()));
    Eigen::Map<Vector> g(out.data(), static_cast<Eigen::Index>(out.size()));
    g = theta / prior_variance_;
    if (data_.features.rows() > 0)
      g -= data_.features.transpose() * (data_.labels - data_.features * theta) / noise_variance_;
  }

  Matrix hessian(const VectorRef& theta) const override {
    const Eigen::Index d = theta.size();
    return Matrix::Identity(d, d) / prior_variance_ +
           data_.features.transpose() * data_.features / noise_variance_;
  }

  double declared_growth() const override { return 2.0; }
  PotentialFamily family() const override { return PotentialFamily::gaussian_posterior; }
  int dimension() const override { return static_cast<int>(data_.features.cols()); }
  std::string id() const override { return "gaussian_posterior"; }

 private:
  RegressionData data_;
  double noise_variance_;
  double prior_variance_;
};

class GaussianKernel final : public Kernel {
 public:
  explicit GaussianKernel(double h) : h_(h) { require(h > 0.0, "kernel bandwidth must be positive"); }

  double value(const VectorRef& x) const override { return std::exp(-x.squaredNorm() / (2.0 * h_ * h_)); }

  double value_and_gradient(std::span<const double> x, std::span<double> grad) const override {
    const double inv_h2 = 1.0 / (h_ * h_);
    const double k = std::exp(-0.5 * squared_norm(x) * inv_h2);
    for (std::size_t i = 0; i < x.size(); ++i) grad[i] = -x[i] * inv_h2 * k;
    return k;
  }

  Matrix hessian(const VectorRef& x) const override {
    const double h2 = h_ * h_;
    return value(x) * (x * x.transpose() / (h2 * h2) - Matrix::Identity(x.size(), x.size()) / h2);
  }

  double laplacian(const VectorRef& x) const override {
    const double h2 = h_ * h_;
    const double d = static_cast<double>(x.size());
    return value(x) * (x.squaredNorm() / (h2 * h2) - d / h2);
  }

  Vector grad_laplacian(const VectorRef& x) const override {
    const double h2 = h_ * h_;
    const double d = static_cast<double>(x.size());
    return x * value(x) * ((d + 2.0) / (h2 * h2) - x.squaredNorm() / (h2 * h2 * h2));
  }

  double bandwidth() const override { return h_; }
  std::string id() const override { return "gaussian"; }

 private:
  double h_;
};

class InverseMultiquadricKernel final : public Kernel {
 public:
  explicit InverseMultiquadricKernel(double h) : h_(h) { require(h > 0.0, "kernel bandwidth must be positive"); }

  double value(const VectorRef& x) const override { return 1.0 / std::sqrt(q(x.squaredNorm())); }

  double value_and_gradient(std::span<const double> x, std::span<double> grad) const override {
    const double qq = q(squared_norm(x));
    const double k = 1.0 / std::sqrt(qq);
    const double factor = -k / (qq * h_ * h_);
    for (std::size_t i = 0; i < x.size(); ++i) grad[i] = factor * x[i];
    return k;
  }

  Matrix hessian(const VectorRef& x) const override {
    const double qq = q(x.squaredNorm());
    const double h2 = h_ * h_;
    return -std::pow(qq, -1.5) / h2 * Matrix::Identity(x.size(), x.size()) +
           3.0 * std::pow(qq, -2.5) / (h2 * h2) * x * x.transpose();
  }

  double laplacian(const VectorRef& x) const override {
    const double r2 = x.squaredNorm();
    const double qq = q(r2);
    const double h2 = h_ * h_;
    const double d = static_cast<double>(x.size());
    return -d / h2 * std::pow(qq, -1.5) + 3.0 * r2 / (h2 * h2) * std::pow(qq, -2.5);
  }

  Vector grad_laplacian(const VectorRef& x) const override {
    const double r2 = x.squaredNorm();
    const double qq = q(r2);
    const double h2 = h_ * h_;
    const double d = static_cast<double>(x.size());
    return x * ((3.0 * d + 6.0) / (h2 * h2) * std::pow(qq, -2.5) - 15.0 * r2 / (h2 * h2 * h2) * std::pow(qq, -3.5));
  }

  double bandwidth() const override { return h_; }
  std::string id() const override { return "imq"; }

 private:
  double q(double r2) const { return 1.0 + r2 / (h_ * h_); }
  double h_;
};

// Piecewise-linear kernels: derivatives are taken almost everywhere.
class TriangleKernel final : public Kernel {
 public:
  explicit TriangleKernel(double h) : h_(h) { require(h > 0.0, "kernel bandwidth must be positive"); }

  double value(const VectorRef& x) const override {
    check(x.size());
    return std::max(0.0, 1.0 - std::abs(x[0]) / h_);
  }
  double value_and_gradient(std::span<const double> x, std::span<double> grad) const override {
    check(static_cast<Eigen::Index>(x.size()));
    const double a = std::abs(x[0]);
    if (a >= h_) {
      grad[0] = 0.0;
      return 0.0;
    }
    grad[0] = x[0] > 0.0 ? -1.0 / h_ : (x[0] < 0.0 ? 1.0 / h_ : 0.0);
    return 1.0 - a / h_;
  }
  Matrix hessian(const VectorRef& x) const override { return Matrix::Zero(x.size(), x.size()); }
  double laplacian(const VectorRef&) const override { return 0.0; }
  Vector grad_laplacian(const VectorRef& x) const override { return Vector::Zero(x.size()); }
  double bandwidth() const override { return h_; }
  std::string id() const override { return "triangle"; }
  bool smooth() const override { return false; }

 private:
  static void check(Eigen::Index d) {
    if (d != 1) throw PreconditionError("triangle kernel is one dimensional");
  }
  double h_;
};

class BoxKernel final : public Kernel {
 public:
  explicit BoxKernel(double h) : h_(h) { require(h > 0.0, "kernel bandwidth must be positive"); }
  double value(const VectorRef& x) const override { return x.norm() <= h_ ? 1.0 : 0.0; }
  double value_and_gradient(std::span<const double> x, std::span<double> grad) const override {
    std::fill(grad.begin(), grad.end(), 0.0);
    return std::sqrt(squared_norm(x)) <= h_ ? 1.0 : 0.0;
  }
  Matrix hessian(const VectorRef& x) const override { return Matrix::Zero(x.size(), x.size()); }
  double laplacian(const VectorRef&) const override { return 0.0; }
  Vector grad_laplacian(const VectorRef& x) const override { return Vector::Zero(x.size()); }
  double bandwidth() const override { return h_; }
  std::string id() const override { return "box"; }
  bool smooth() const override { return false; }

 private:
  double h_;
};

double parameter(const ParameterMap& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("parameter '" + key + "' is not a number: " + it->second);
  }
}

std::vector<double> parse_numbers(const std::string& text, char separator) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, separator)) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("not a number: " + item);
    }
  }
  return out;
}

}  // namespace

PotentialPtr make_zero_potential() { return std::make_shared<ZeroPotential>(); }
PotentialPtr make_quadratic_potential(double scale) {
  require(scale > 0.0, "quadratic scale must be positive");
  return std::make_shared<QuadraticPotential>(scale);
}
PotentialPtr make_smoothed_abs_potential(double scale) {
  require(scale > 0.0, "smoothed_abs scale must be positive");
  return std::make_shared<SmoothedAbsPotential>(scale);
}
PotentialPtr make_quartic_potential(double scale) {
  require(scale > 0.0, "quartic scale must be positive");
  return std::make_shared<QuarticPotential>(scale);
}
PotentialPtr make_gaussian_mixture_potential(std::vector<double> weights, std::vector<Vector> means, double sigma) {
  return std::make_shared<GaussianMixturePotential>(std::move(weights), std::move(means), sigma);
}
PotentialPtr make_logistic_posterior(RegressionData data, double prior_variance) {
  return std::make_shared<LogisticPosterior>(std::move(data), prior_variance);
}
PotentialPtr make_gaussian_posterior(RegressionData data, double noise_variance, double prior_variance) {
  return std::make_shared<GaussianPosterior>(std::move(data), noise_variance, prior_variance);
}

KernelPtr make_gaussian_kernel(double bandwidth) { return std::make_shared<GaussianKernel>(bandwidth); }
KernelPtr make_inverse_multiquadric_kernel(double bandwidth) {
  return std::make_shared<InverseMultiquadricKernel>(bandwidth);
}
KernelPtr make_triangle_kernel(double bandwidth) { return std::make_shared<TriangleKernel>(bandwidth); }
KernelPtr make_box_kernel(double bandwidth) { return std::make_shared<BoxKernel>(bandwidth); }

RegressionData read_regression_data(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open data file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::stringstream ss(line);
    std::vector<double> row;
    std::string token;
    while (ss >> token) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(token, &used));
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw ConfigError("malformed data file " + path + " line " + std::to_string(line_no) + ": " + token);
      }
    }
    if (row.empty()) continue;
    if (row.size() < 2) throw ConfigError("data row needs a label and at least one feature (line " + std::to_string(line_no) + ")");
    if (!rows.empty() && row.size() != rows.front().size())
      throw ConfigError("ragged data file " + path + " at line " + std::to_string(line_no));
    rows.push_back(std::move(row));
  }
  RegressionData data;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index k = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()) - 1;
  data.labels.resize(n);
  data.features.resize(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    data.labels[i] = rows[i][0];
    for (Eigen::Index j = 0; j < k; ++j) data.features(i, j) = rows[i][j + 1];
  }
  return data;
}

PotentialPtr make_potential(const std::string& id, const ParameterMap& params) {
  if (id == "zero") return make_zero_potential();
  if (id == "quadratic") return make_quadratic_potential(parameter(params, "scale", 1.0));
  if (id == "smoothed_abs") return make_smoothed_abs_potential(parameter(params, "scale", 1.0));
  if (id == "quartic") return make_quartic_potential(parameter(params, "scale", 1.0));
  if (id == "gaussian_mixture") {
    auto w = params.count("weights") ? parse_numbers(params.at("weights"), ',') : std::vector<double>{0.5, 0.5};
    std::vector<Vector> means;
    const std::string mtext = params.count("means") ? params.at("means") : std::string("-2;2");
    std::stringstream ss(mtext);
    std::string point;
    while (std::getline(ss, point, ';')) {
      auto coords = parse_numbers(point, ',');
      if (coords.empty()) continue;
      means.push_back(Eigen::Map<Vector>(coords.data(), static_cast<Eigen::Index>(coords.size())));
    }
    if (w.size() != means.size()) throw ConfigError("gaussian_mixture: weights and means differ in length");
    return make_gaussian_mixture_potential(std::move(w), std::move(means), parameter(params, "sigma", 1.0));
  }
  if (id == "logistic_posterior" || id == "gaussian_posterior") {
    auto it = params.find("data_file");
    if (it == params.end()) throw ConfigError(id + " needs a data_file parameter");
    RegressionData data = read_regression_data(it->second);
    const double prior = parameter(params, "prior_variance", 1.0);
    if (id == "logistic_posterior") return make_logistic_posterior(std::move(data), prior);
    return make_gaussian_posterior(std::move(data), parameter(params, "noise_variance", 1.0), prior);
  }
  throw ConfigError("unknown potential id: " + id);
}

KernelPtr make_kernel(const std::string& id, const ParameterMap& params) {
  const double h = parameter(params, "bandwidth", 1.0);
  if (h <= 0.0) throw ConfigError("kernel bandwidth must be positive");
  if (id == "gaussian") return make_gaussian_kernel(h);
  if (id == "imq") return make_inverse_multiquadric_kernel(h);
  if (id == "triangle") return make_triangle_kernel(h);
  if (id == "box") return make_box_kernel(h);
  throw ConfigError("unknown kernel id: " + id);
}

}  // namespace steinlab
