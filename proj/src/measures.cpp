#include "steinlab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace steinlab {

namespace {

bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double parse_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("malformed number in CSV: '" + s + "'");
  }
}

}  // namespace

// --- ParticleEnsemble -------------------------------------------------------

ParticleEnsemble::ParticleEnsemble(PointCloud positions) : positions_(std::move(positions)) {
  require(positions_.cols() >= 1, "particle ensemble needs at least one particle");
  require(positions_.rows() >= 1, "particle ensemble needs dimension >= 1");
  for (Eigen::Index i = 0; i < positions_.cols(); ++i)
    if (!positions_.col(i).allFinite())
      throw PreconditionError("particle " + std::to_string(i) + " has a non-finite position");
}

ParticleEnsemble ParticleEnsemble::from_values(const std::vector<double>& xs) {
  PointCloud p(1, static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) p(0, static_cast<Eigen::Index>(i)) = xs[i];
  return ParticleEnsemble(std::move(p));
}

// --- SignedDiscreteMeasure ---------------------------------------------------

SignedDiscreteMeasure::SignedDiscreteMeasure(PointCloud positions, Vector weights)
    : positions_(std::move(positions)), weights_(std::move(weights)) {
  require(positions_.cols() == weights_.size(), "measure needs one weight per atom");
  require(all_finite(positions_), "measure positions must be finite");
  require(weights_.allFinite(), "measure weights must be finite");
}

SignedDiscreteMeasure SignedDiscreteMeasure::from_ensemble(const ParticleEnsemble& ensemble) {
  return SignedDiscreteMeasure(ensemble.positions(), Vector::Constant(ensemble.size(), ensemble.weight()));
}

SignedDiscreteMeasure SignedDiscreteMeasure::dirac(const VectorRef& x, double weight) {
  PointCloud p = x;
  return SignedDiscreteMeasure(std::move(p), Vector::Constant(1, weight));
}

SignedDiscreteMeasure SignedDiscreteMeasure::canonicalize() const {
  const Eigen::Index n = size();
  const Eigen::Index d = dim();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index k = 0; k < d; ++k) {
      if (positions_(k, a) < positions_(k, b)) return true;
      if (positions_(k, a) > positions_(k, b)) return false;
    }
    return false;
  });

  std::vector<Eigen::Index> kept;
  std::vector<double> kept_weights;
  kept.reserve(order.size());
  for (Eigen::Index idx : order) {
    bool merged = false;
    // Kept atoms are sorted by first coordinate; only a trailing window can match.
    for (std::size_t j = kept.size(); j-- > 0;) {
      const Eigen::Index other = kept[j];
      if (positions_(0, idx) - positions_(0, other) > kMergeTolerance) break;
      if ((positions_.col(idx) - positions_.col(other)).cwiseAbs().maxCoeff() <= kMergeTolerance) {
        kept_weights[j] += weights_[idx];
        merged = true;
        break;
      }
    }
    if (!merged) {
      kept.push_back(idx);
      kept_weights.push_back(weights_[idx]);
    }
  }

  Eigen::Index nonzero = 0;
  for (double w : kept_weights)
    if (w != 0.0) ++nonzero;
  PointCloud p(d, nonzero);
  Vector w(nonzero);
  Eigen::Index k = 0;
  for (std::size_t j = 0; j < kept.size(); ++j) {
    if (kept_weights[j] == 0.0) continue;
    p.col(k) = positions_.col(kept[j]);
    w[k] = kept_weights[j];
    ++k;
  }
  return SignedDiscreteMeasure(std::move(p), std::move(w));
}

SignedDiscreteMeasure SignedDiscreteMeasure::positive_part() const {
  PointCloud p(dim(), 0);
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < size(); ++i)
    if (weights_[i] > 0.0) idx.push_back(i);
  p.resize(dim(), static_cast<Eigen::Index>(idx.size()));
  Vector w(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    p.col(static_cast<Eigen::Index>(k)) = positions_.col(idx[k]);
    w[static_cast<Eigen::Index>(k)] = weights_[idx[k]];
  }
  return SignedDiscreteMeasure(std::move(p), std::move(w));
}

SignedDiscreteMeasure SignedDiscreteMeasure::negative_part() const {
  return scaled(-1.0).positive_part();
}

SignedDiscreteMeasure SignedDiscreteMeasure::scaled(double factor) const {
  return SignedDiscreteMeasure(positions_, weights_ * factor);
}

SignedDiscreteMeasure add(const SignedDiscreteMeasure& a, const SignedDiscreteMeasure& b) {
  if (a.size() == 0 && a.dim() == 0) return b.canonicalize();
  if (b.size() == 0 && b.dim() == 0) return a.canonicalize();
  require(a.dim() == b.dim(), "dimension mismatch between measures");
  PointCloud p(a.dim(), a.size() + b.size());
  p << a.positions(), b.positions();
  Vector w(a.size() + b.size());
  w << a.weights(), b.weights();
  return SignedDiscreteMeasure(std::move(p), std::move(w)).canonicalize();
}

SignedDiscreteMeasure subtract(const SignedDiscreteMeasure& a, const SignedDiscreteMeasure& b) {
  require(a.dim() == b.dim(), "dimension mismatch between measures");
  return add(a, b.scaled(-1.0));
}

SignedDiscreteMeasure subtract(const ParticleEnsemble& a, const SignedDiscreteMeasure& b) {
  return subtract(SignedDiscreteMeasure::from_ensemble(a), b);
}

SignedDiscreteMeasure subtract(const ParticleEnsemble& a, const ParticleEnsemble& b) {
  return subtract(SignedDiscreteMeasure::from_ensemble(a), SignedDiscreteMeasure::from_ensemble(b));
}

// --- Grids -------------------------------------------------------------------

UniformGrid1D::UniformGrid1D(double l, double r, Eigen::Index n) : left(l), right(r), cells(n) {
  require(std::isfinite(l) && std::isfinite(r) && r > l, "grid needs right > left");
  require(n >= 2, "grid needs at least two cells");
}

Vector UniformGrid1D::centers() const {
  Vector x(cells);
  for (Eigen::Index i = 0; i < cells; ++i) x[i] = center(i);
  return x;
}

GridDensity1D::GridDensity1D(UniformGrid1D grid, Vector values, double target_mass)
    : grid_(grid), values_(std::move(values)), target_mass_(target_mass) {
  require(values_.size() == grid_.cells, "grid density needs one value per cell");
  require(values_.allFinite(), "grid density values must be finite");
  require(values_.minCoeff() >= 0.0, "grid density values must be nonnegative");
  require(std::abs(mass() - target_mass_) <= 1e-8,
          "grid density mass " + format_double(mass()) + " differs from target " + format_double(target_mass_));
}

GridDensity1D GridDensity1D::from_function(const UniformGrid1D& grid, const std::function<double(double)>& f,
                                           double target_mass) {
  Vector v(grid.cells);
  for (Eigen::Index i = 0; i < grid.cells; ++i) v[i] = f(grid.center(i));
  const double m = v.sum() * grid.spacing();
  require(m > 0.0 && std::isfinite(m), "density function has no positive finite mass on the grid");
  v *= target_mass / m;
  return GridDensity1D(grid, std::move(v), target_mass);
}

GridField1D::GridField1D(UniformGrid1D grid, Vector values) : grid_(grid), values_(std::move(values)) {
  require(values_.size() == grid_.cells, "grid field needs one value per cell");
  require(values_.allFinite(), "grid field values must be finite");
}

GridField1D GridField1D::from_function(const UniformGrid1D& grid, const std::function<double(double)>& f) {
  Vector v(grid.cells);
  for (Eigen::Index i = 0; i < grid.cells; ++i) v[i] = f(grid.center(i));
  return GridField1D(grid, std::move(v));
}

// --- Target density -----------------------------------------------------------

Box Box::cube(Eigen::Index dim, double lo, double hi) {
  return Box{Vector::Constant(dim, lo), Vector::Constant(dim, hi)};
}

double compute_Z(const Potential& potential, const Box& domain, Eigen::Index resolution) {
  const Eigen::Index d = domain.dim();
  if (d > 2 || d < 1) throw PreconditionError("unsupported dimension for quadrature");
  require(resolution >= 64, "quadrature resolution must be at least 64 nodes per axis");
  require((domain.upper.array() > domain.lower.array()).all(), "quadrature box must have positive extent");

  const Vector step = (domain.upper - domain.lower) / static_cast<double>(resolution - 1);
  auto trapezoid_weight = [&](Eigen::Index i) { return (i == 0 || i == resolution - 1) ? 0.5 : 1.0; };
  auto sample = [&](const Vector& x) {
    const double v = std::exp(-potential.value(x));
    if (!std::isfinite(v)) throw NumericError("potential overflow");
    return v;
  };

  double sum = 0.0;
  if (d == 1) {
    Vector x(1);
    for (Eigen::Index i = 0; i < resolution; ++i) {
      x[0] = domain.lower[0] + static_cast<double>(i) * step[0];
      sum += trapezoid_weight(i) * sample(x);
    }
    return sum * step[0];
  }
  Vector x(2);
  for (Eigen::Index i = 0; i < resolution; ++i) {
    x[0] = domain.lower[0] + static_cast<double>(i) * step[0];
    double row = 0.0;
    for (Eigen::Index j = 0; j < resolution; ++j) {
      x[1] = domain.lower[1] + static_cast<double>(j) * step[1];
      row += trapezoid_weight(j) * sample(x);
    }
    sum += trapezoid_weight(i) * row;
  }
  return sum * step[0] * step[1];
}

TargetDensity::TargetDensity(PotentialPtr potential, Box domain, Eigen::Index resolution)
    : potential_(std::move(potential)), domain_(std::move(domain)) {
  require(potential_ != nullptr, "target density needs a potential");
  const Eigen::Index cap = domain_.dim() == 1 ? (Eigen::Index{1} << 16) : 4096;
  Eigen::Index r = std::max<Eigen::Index>(resolution, 64);
  double z = compute_Z(*potential_, domain_, r);
  for (;;) {
    if (2 * r - 1 > cap) throw NumericError("normalisation constant did not converge under refinement");
    const double z2 = compute_Z(*potential_, domain_, 2 * r - 1);
    const bool converged = std::abs(z2 - z) <= 1e-6 * std::abs(z2);
    z = z2;
    r = 2 * r - 1;
    if (converged) break;
  }
  require(z > 0.0, "normalisation constant must be positive");
  z_ = z;
  resolution_ = r;

  if (potential_->declared_growth() > 0.0) {
    const Vector center = 0.5 * (domain_.lower + domain_.upper);
    const Vector half = 0.5 * (domain_.upper - domain_.lower);
    Box wide{center - 2.0 * half, center + 2.0 * half};
    const double z_wide = compute_Z(*potential_, wide, 2 * r - 1);
    tail_mass_ = std::max(0.0, (z_wide - z_) / z_wide);
    if (tail_mass_ > 1e-8)
      throw PreconditionError("truncation box leaves tail mass " + format_double(tail_mass_) + " > 1e-8");
  }
}

double TargetDensity::density(const VectorRef& x) const { return std::exp(-potential_->value(x)) / z_; }

Vector TargetDensity::density_gradient(const VectorRef& x) const {
  return -density(x) * potential_->gradient(x);
}

Box truncation_box(const Potential& potential, Eigen::Index dim, double threshold) {
  const double log_threshold = -std::log(threshold);
  std::vector<Vector> directions;
  for (Eigen::Index k = 0; k < dim; ++k) {
    Vector e = Vector::Zero(dim);
    e[k] = 1.0;
    directions.push_back(e);
    directions.push_back(-e);
  }
  directions.push_back(Vector::Constant(dim, 1.0 / std::sqrt(static_cast<double>(dim))));
  directions.push_back(-directions.back());
  for (double radius = 0.5; radius <= 1e4; radius += 0.5) {
    bool outside = true;
    for (const auto& u : directions)
      if (potential.value(radius * u) < log_threshold) outside = false;
    if (outside) return Box::cube(dim, -radius, radius);
  }
  throw NumericError("potential does not confine: no truncation box up to radius 1e4");
}

SignedDiscreteMeasure quadrature_measure(const TargetDensity& target, Eigen::Index atoms_per_axis) {
  return quadrature_measure(target, atoms_per_axis, target.domain());
}

SignedDiscreteMeasure quadrature_measure(const TargetDensity& target, Eigen::Index atoms_per_axis, const Box& box) {
  require(atoms_per_axis >= 2, "quadrature needs at least two atoms per axis");
  const Eigen::Index d = box.dim();
  require(d == target.domain().dim(), "quadrature box and target differ in dimension");
  require(d <= 2, "unsupported dimension for quadrature");
  const Vector step = (box.upper - box.lower) / static_cast<double>(atoms_per_axis - 1);
  auto tw = [&](Eigen::Index i) { return (i == 0 || i == atoms_per_axis - 1) ? 0.5 : 1.0; };

  const Eigen::Index total = d == 1 ? atoms_per_axis : atoms_per_axis * atoms_per_axis;
  PointCloud p(d, total);
  Vector w(total);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < atoms_per_axis; ++i) {
    if (d == 1) {
      p(0, k) = box.lower[0] + static_cast<double>(i) * step[0];
      w[k] = tw(i) * target.density(p.col(k));
      ++k;
      continue;
    }
    for (Eigen::Index j = 0; j < atoms_per_axis; ++j) {
      p(0, k) = box.lower[0] + static_cast<double>(i) * step[0];
      p(1, k) = box.lower[1] + static_cast<double>(j) * step[1];
      w[k] = tw(i) * tw(j) * target.density(p.col(k));
      ++k;
    }
  }
  w /= w.sum();
  return SignedDiscreteMeasure(std::move(p), std::move(w));
}

GridDensity1D target_on_grid(const TargetDensity& target, const UniformGrid1D& grid) {
  require(target.domain().dim() == 1, "target_on_grid needs a one-dimensional target");
  Vector x(1);
  return GridDensity1D::from_function(grid, [&](double c) {
    x[0] = c;
    return target.density(x);
  });
}

ParticleEnsemble sample_gaussian(Eigen::Index n, const Vector& mean, double std_dev, Philox& rng) {
  require(n >= 1, "sample size must be positive");
  PointCloud p(mean.size(), n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < mean.size(); ++k) p(k, i) = mean[k] + std_dev * rng.normal();
  return ParticleEnsemble(std::move(p));
}

ParticleEnsemble sample_target(const TargetDensity& target, Eigen::Index n, Philox& rng) {
  require(n >= 1, "sample size must be positive");
  const Box& box = target.domain();
  const Eigen::Index d = box.dim();
  PointCloud out(d, n);

  if (d == 1) {
    constexpr Eigen::Index cells = 1 << 15;
    const double lo = box.lower[0];
    const double h = (box.upper[0] - lo) / static_cast<double>(cells);
    std::vector<double> cdf(cells + 1, 0.0);
    Vector x(1);
    for (Eigen::Index i = 0; i < cells; ++i) {
      x[0] = lo + (static_cast<double>(i) + 0.5) * h;
      cdf[static_cast<std::size_t>(i) + 1] = cdf[static_cast<std::size_t>(i)] + target.density(x) * h;
    }
    const double total = cdf.back();
    for (Eigen::Index s = 0; s < n; ++s) {
      const double u = rng.uniform() * total;
      auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      const auto cell = std::clamp<std::ptrdiff_t>(std::distance(cdf.begin(), it) - 1, 0, cells - 1);
      const double a = cdf[static_cast<std::size_t>(cell)];
      const double b = cdf[static_cast<std::size_t>(cell) + 1];
      const double frac = b > a ? (u - a) / (b - a) : 0.5;
      out(0, s) = lo + (static_cast<double>(cell) + frac) * h;
    }
    return ParticleEnsemble(std::move(out));
  }

  // Rejection against N(center, sigma^2 I) restricted to the box; the envelope
  // constant is probe-based.
  const Vector center = 0.5 * (box.lower + box.upper);
  const double sigma = 0.25 * (box.upper - box.lower).minCoeff();
  auto log_envelope = [&](const Vector& x) { return -(x - center).squaredNorm() / (2.0 * sigma * sigma); };
  double log_m = -std::numeric_limits<double>::infinity();
  Philox probe(Philox::stream_key(0x5eed, static_cast<std::uint64_t>(d)));
  Vector x(d);
  for (int s = 0; s < 20000; ++s) {
    for (Eigen::Index k = 0; k < d; ++k)
      x[k] = box.lower[k] + probe.uniform() * (box.upper[k] - box.lower[k]);
    log_m = std::max(log_m, -target.potential().value(x) - log_envelope(x));
  }
  log_m += std::log(1.5);
  for (Eigen::Index s = 0; s < n;) {
    for (Eigen::Index k = 0; k < d; ++k) x[k] = center[k] + sigma * rng.normal();
    if (((x.array() < box.lower.array()) || (x.array() > box.upper.array())).any()) continue;
    const double log_ratio = -target.potential().value(x) - log_envelope(x) - log_m;
    if (std::log(rng.uniform()) < log_ratio) out.col(s++) = x;
  }
  return ParticleEnsemble(std::move(out));
}

// --- Moments -------------------------------------------------------------------

double moment(const SignedDiscreteMeasure& measure, double p) {
  require(p >= 0.0, "moment order must be nonnegative");
  double s = 0.0;
  for (Eigen::Index i = 0; i < measure.size(); ++i)
    s += std::abs(measure.weights()[i]) * std::pow(measure.positions().col(i).norm(), p);
  return s;
}

double moment(const ParticleEnsemble& ensemble, double p) {
  return moment(SignedDiscreteMeasure::from_ensemble(ensemble), p);
}

double moment(const GridDensity1D& density, double p) {
  require(p >= 0.0, "moment order must be nonnegative");
  double s = 0.0;
  const auto& g = density.grid();
  for (Eigen::Index i = 0; i < g.cells; ++i) s += density.values()[i] * std::pow(std::abs(g.center(i)), p);
  return s * g.spacing();
}

// --- CSV -----------------------------------------------------------------------

void write_csv(std::ostream& out, const SignedDiscreteMeasure& measure) {
  for (Eigen::Index k = 0; k < measure.dim(); ++k) out << "x_" << (k + 1) << ',';
  out << "weight\n";
  for (Eigen::Index i = 0; i < measure.size(); ++i) {
    for (Eigen::Index k = 0; k < measure.dim(); ++k) out << format_double(measure.positions()(k, i)) << ',';
    out << format_double(measure.weights()[i]) << '\n';
  }
}

SignedDiscreteMeasure read_measure_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty measure CSV");
  const auto header = split(line, ',');
  if (header.size() < 2 || header.back() != "weight") throw ConfigError("measure CSV header must end in 'weight'");
  const auto d = static_cast<Eigen::Index>(header.size() - 1);
  std::vector<double> coords, weights;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (static_cast<Eigen::Index>(cells.size()) != d + 1) throw ConfigError("measure CSV row has wrong arity: " + line);
    for (Eigen::Index k = 0; k < d; ++k) coords.push_back(parse_double(cells[static_cast<std::size_t>(k)]));
    weights.push_back(parse_double(cells.back()));
  }
  const auto n = static_cast<Eigen::Index>(weights.size());
  PointCloud p = Eigen::Map<PointCloud>(coords.data(), d, n);
  return SignedDiscreteMeasure(std::move(p), Eigen::Map<Vector>(weights.data(), n));
}

void write_csv(std::ostream& out, const GridDensity1D& density) {
  const auto& g = density.grid();
  out << "# left=" << format_double(g.left) << ",right=" << format_double(g.right) << ",n_cells=" << g.cells
      << ",target_mass=" << format_double(density.target_mass()) << '\n';
  out << "cell,value\n";
  for (Eigen::Index i = 0; i < g.cells; ++i) out << i << ',' << format_double(density.values()[i]) << '\n';
}

GridDensity1D read_grid_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw ConfigError("grid CSV must start with a '# ' header");
  double left = 0, right = 0, mass = 1;
  Eigen::Index cells = 0;
  for (const auto& item : split(line.substr(2), ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("bad grid header entry: " + item);
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    if (key == "left") left = parse_double(val);
    else if (key == "right") right = parse_double(val);
    else if (key == "n_cells") cells = static_cast<Eigen::Index>(parse_double(val));
    else if (key == "target_mass") mass = parse_double(val);
  }
  if (!std::getline(in, line) || line != "cell,value") throw ConfigError("grid CSV column header must be 'cell,value'");
  Vector v = Vector::Zero(cells);
  Eigen::Index seen = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split(line, ',');
    if (c.size() != 2) throw ConfigError("grid CSV row has wrong arity: " + line);
    const auto i = static_cast<Eigen::Index>(parse_double(c[0]));
    if (i < 0 || i >= cells) throw ConfigError("grid CSV cell index out of range: " + line);
    v[i] = parse_double(c[1]);
    ++seen;
  }
  if (seen != cells) throw ConfigError("grid CSV has " + std::to_string(seen) + " rows, header says " + std::to_string(cells));
  return GridDensity1D(UniformGrid1D(left, right, cells), std::move(v), mass);
}

}  // namespace steinlab
