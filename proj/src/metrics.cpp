#include "steinlab/metrics.hpp"

#include "steinlab/lp.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <utility>

namespace steinlab {

namespace {

Vector objective_weights(const SignedDiscreteMeasure& mu, const Potential* potential) {
  Vector c = mu.weights();
  if (potential != nullptr)
    for (Eigen::Index i = 0; i < mu.size(); ++i) c[i] *= 1.0 + potential->value(mu.positions().col(i));
  return c;
}

// A concave piecewise-linear function on [-1, 1] given by its breakpoints.
using Piecewise = std::vector<std::pair<double, double>>;

double evaluate(const Piecewise& f, double x) {
  if (x <= f.front().first) return f.front().second;
  for (std::size_t k = 1; k < f.size(); ++k) {
    if (x <= f[k].first) {
      const auto [x0, y0] = f[k - 1];
      const auto [x1, y1] = f[k];
      return x1 > x0 ? y0 + (y1 - y0) * (x - x0) / (x1 - x0) : y1;
    }
  }
  return f.back().second;
}

// Restricts to [-1, 1], inserting interpolated end points and dropping duplicates.
Piecewise clip(const Piecewise& f) {
  Piecewise out;
  out.emplace_back(-1.0, evaluate(f, -1.0));
  for (const auto& [x, y] : f)
    if (x > -1.0 && x < 1.0 && x > out.back().first) out.emplace_back(x, y);
  out.emplace_back(1.0, evaluate(f, 1.0));
  return out;
}

// Exact maximisation on a sorted chain: |phi_i| <= 1, |phi_{i+1} - phi_i| <= gap_i.
LPResult chain_solve(const std::vector<double>& gaps, const Vector& c) {
  const auto k = static_cast<std::size_t>(c.size());
  std::vector<std::pair<double, double>> plateaus(k);
  Piecewise f{{-1.0, -c[0]}, {1.0, c[0]}};
  for (std::size_t i = 0;; ++i) {
    std::size_t arg = 0;
    for (std::size_t q = 1; q < f.size(); ++q)
      if (f[q].second > f[arg].second) arg = q;
    std::size_t last = arg;
    while (last + 1 < f.size() && f[last + 1].second == f[arg].second) ++last;
    plateaus[i] = {f[arg].first, f[last].first};
    if (i + 1 == k) break;

    const double g = gaps[i];
    Piecewise shifted;
    for (std::size_t q = 0; q <= arg; ++q) shifted.emplace_back(f[q].first - g, f[q].second);
    for (std::size_t q = last; q < f.size(); ++q) shifted.emplace_back(f[q].first + g, f[q].second);
    f = clip(shifted);
    for (auto& [x, y] : f) y += c[static_cast<Eigen::Index>(i + 1)] * x;
  }

  LPResult result;
  result.solver = "chain";
  result.phi.resize(c.size());
  double phi = plateaus[k - 1].first;
  result.phi[static_cast<Eigen::Index>(k - 1)] = phi;
  for (std::size_t i = k - 1; i-- > 0;) {
    double next = std::clamp(phi, plateaus[i].first, plateaus[i].second);
    next = std::clamp(next, phi - gaps[i], phi + gaps[i]);
    phi = std::clamp(next, -1.0, 1.0);
    result.phi[static_cast<Eigen::Index>(i)] = phi;
  }
  result.value = c.dot(result.phi);
  return result;
}

// Largest feasible function below phi: the truncated inf-convolution with |x - y|.
Vector repair(const PointCloud& x, const Vector& phi) {
  Vector out(phi.size());
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    double v = phi[i];
    for (Eigen::Index j = 0; j < phi.size(); ++j) v = std::min(v, phi[j] + (x.col(i) - x.col(j)).norm());
    out[i] = std::clamp(v, -1.0, 1.0);
  }
  return out;
}

LPResult simplex_solve(const PointCloud& x, const Vector& c, long max_iterations) {
  const Eigen::Index k = c.size();
  auto dist = [&](Eigen::Index i, Eigen::Index j) { return (x.col(i) - x.col(j)).norm(); };

  // Initial pairs: each atom with its nearest neighbour.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  auto add_pair = [&](Eigen::Index i, Eigen::Index j) {
    if (i > j) std::swap(i, j);
    if (dist(i, j) >= 2.0) return false;
    if (std::find(pairs.begin(), pairs.end(), std::make_pair(i, j)) != pairs.end()) return false;
    pairs.emplace_back(i, j);
    return true;
  };
  for (Eigen::Index i = 0; i < k; ++i) {
    Eigen::Index best = -1;
    for (Eigen::Index j = 0; j < k; ++j)
      if (j != i && (best < 0 || dist(i, j) < dist(i, best))) best = j;
    if (best >= 0) add_pair(i, best);
  }

  LPResult result;
  result.solver = "simplex";
  for (;;) {
    // Variables psi = phi + 1 in [0, 2].
    const auto m = static_cast<Eigen::Index>(k + 2 * static_cast<Eigen::Index>(pairs.size()));
    Matrix a = Matrix::Zero(m, k);
    Vector b(m);
    for (Eigen::Index i = 0; i < k; ++i) {
      a(i, i) = 1.0;
      b[i] = 2.0;
    }
    Eigen::Index row = k;
    for (const auto& [i, j] : pairs) {
      const double d = dist(i, j);
      a(row, i) = 1.0;
      a(row, j) = -1.0;
      b[row++] = d;
      a(row, i) = -1.0;
      a(row, j) = 1.0;
      b[row++] = d;
    }
    const SimplexResult sr = simplex_maximize(a, b, c, max_iterations - result.iterations);
    result.iterations += sr.iterations;
    result.phi = (sr.x.array() - 1.0).matrix();
    if (!sr.optimal) {
      result.status = "iteration limit";
      result.phi = repair(x, result.phi);
      break;
    }
    bool added = false;
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = i + 1; j < k; ++j)
        if (std::abs(result.phi[i] - result.phi[j]) > dist(i, j) + 1e-12) added |= add_pair(i, j);
    if (!added) break;
  }
  result.value = c.dot(result.phi);
  return result;
}

}  // namespace

LPResult bl_weighted_norm(const SignedDiscreteMeasure& input, const Potential* potential, BLSolver solver,
                          long max_iterations) {
  const SignedDiscreteMeasure mu = input.canonicalize();
  if (mu.size() == 0) return LPResult{0.0, Vector(0), "optimal", 0, "chain"};
  const Vector c = objective_weights(mu, potential);
  if (solver == BLSolver::automatic) solver = mu.dim() == 1 ? BLSolver::chain : BLSolver::simplex;
  if (solver == BLSolver::chain) {
    require(mu.dim() == 1, "the chain solver needs one-dimensional atoms");
    std::vector<double> gaps;
    for (Eigen::Index i = 0; i + 1 < mu.size(); ++i) gaps.push_back(mu.positions()(0, i + 1) - mu.positions()(0, i));
    return chain_solve(gaps, c);
  }
  require(mu.size() <= 4000, "the simplex solver supports at most 4000 atoms");
  return simplex_solve(mu.positions(), c, max_iterations);
}

bool bl_feasible(const SignedDiscreteMeasure& input, const Vector& phi, double slack) {
  const SignedDiscreteMeasure mu = input.canonicalize();
  if (phi.size() != mu.size()) return false;
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    if (std::abs(phi[i]) > 1.0 + slack) return false;
    for (Eigen::Index j = i + 1; j < phi.size(); ++j)
      if (std::abs(phi[i] - phi[j]) > (mu.positions().col(i) - mu.positions().col(j)).norm() + slack) return false;
  }
  return true;
}

double bl_bruteforce_oracle(const SignedDiscreteMeasure& input, const Potential* potential, int resolution) {
  const SignedDiscreteMeasure mu = input.canonicalize();
  if (input.size() > 4) throw PreconditionError("brute-force oracle supports at most 4 atoms");
  require(resolution >= 2, "oracle resolution must be at least 2");
  const Eigen::Index k = mu.size();
  if (k == 0) return 0.0;
  const Vector c = objective_weights(mu, potential);
  const double step = 2.0 / static_cast<double>(resolution - 1);
  Matrix dist(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) dist(i, j) = (mu.positions().col(i) - mu.positions().col(j)).norm();

  std::vector<int> idx(static_cast<std::size_t>(k), 0);
  Vector phi(k);
  double best = -std::numeric_limits<double>::infinity();
  for (;;) {
    for (Eigen::Index i = 0; i < k; ++i) phi[i] = -1.0 + step * idx[static_cast<std::size_t>(i)];
    bool ok = true;
    for (Eigen::Index i = 0; i < k && ok; ++i)
      for (Eigen::Index j = i + 1; j < k && ok; ++j) ok = std::abs(phi[i] - phi[j]) <= dist(i, j) + 1e-12;
    if (ok) best = std::max(best, c.dot(phi));
    Eigen::Index pos = 0;
    while (pos < k && ++idx[static_cast<std::size_t>(pos)] == resolution) idx[static_cast<std::size_t>(pos++)] = 0;
    if (pos == k) break;
  }
  return best;
}

double wasserstein_1d(double p, const ParticleEnsemble& a, const ParticleEnsemble& b) {
  require(p >= 1.0, "Wasserstein order must be >= 1");
  require(a.dim() == 1 && b.dim() == 1, "wasserstein_1d needs one-dimensional ensembles");
  if (a.size() != b.size()) throw PreconditionError("unequal ensemble sizes");
  std::vector<double> xa(a.positions().data(), a.positions().data() + a.size());
  std::vector<double> xb(b.positions().data(), b.positions().data() + b.size());
  std::sort(xa.begin(), xa.end());
  std::sort(xb.begin(), xb.end());
  double s = 0.0;
  for (std::size_t i = 0; i < xa.size(); ++i) s += std::pow(std::abs(xa[i] - xb[i]), p);
  return std::pow(s / static_cast<double>(xa.size()), 1.0 / p);
}

double wasserstein_1d(double p, const SignedDiscreteMeasure& a_in, const SignedDiscreteMeasure& b_in) {
  require(p >= 1.0, "Wasserstein order must be >= 1");
  const SignedDiscreteMeasure a = a_in.canonicalize(), b = b_in.canonicalize();
  require(a.dim() == 1 && b.dim() == 1, "wasserstein_1d needs one-dimensional measures");
  require(a.size() > 0 && b.size() > 0, "Wasserstein distance needs nonempty measures");
  require(a.weights().minCoeff() >= 0.0 && b.weights().minCoeff() >= 0.0, "Wasserstein distance needs nonnegative measures");
  const double ma = a.total_mass(), mb = b.total_mass();
  require(std::abs(ma - mb) <= 1e-9 * std::max(ma, mb), "Wasserstein distance needs equal masses");

  // Walk both quantile functions on the merged grid of cumulative masses.
  Eigen::Index i = 0, j = 0;
  double ra = a.weights()[0] / ma, rb = b.weights()[0] / mb;
  double s = 0.0;
  while (i < a.size() && j < b.size()) {
    const double step = std::min(ra, rb);
    s += step * std::pow(std::abs(a.positions()(0, i) - b.positions()(0, j)), p);
    ra -= step;
    rb -= step;
    if (ra <= 1e-15) {
      if (++i < a.size()) ra += a.weights()[i] / ma;
    }
    if (rb <= 1e-15) {
      if (++j < b.size()) rb += b.weights()[j] / mb;
    }
  }
  return std::pow(s * ma, 1.0 / p);
}

double wasserstein_assignment(double p, const ParticleEnsemble& a, const ParticleEnsemble& b) {
  require(p >= 1.0, "Wasserstein order must be >= 1");
  if (a.size() != b.size()) throw PreconditionError("unequal ensemble sizes");
  require(a.dim() == b.dim(), "dimension mismatch between ensembles");
  require(a.size() <= 4096, "assignment supports at most 4096 particles");
  const Eigen::Index n = a.size();
  Matrix cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = (a.position(i) - b.position(j)).norm();
      cost(i, j) = p == 1.0 ? d : p == 2.0 ? d * d : std::pow(d, p);
    }
  const auto match = solve_assignment(cost);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) total += cost(i, match[static_cast<std::size_t>(i)]);
  return std::pow(total / static_cast<double>(n), 1.0 / p);
}

double kl_divergence(const GridDensity1D& rho, const GridDensity1D& sigma) {
  if (!(rho.grid() == sigma.grid())) throw PreconditionError("grid mismatch");
  constexpr double tol = 1e-300;
  double s = 0.0;
  for (Eigen::Index i = 0; i < rho.values().size(); ++i) {
    const double r = rho.values()[i], q = sigma.values()[i];
    if (r <= tol) continue;
    if (q <= tol) return std::numeric_limits<double>::infinity();
    s += r * std::log(r / q);
  }
  return s * rho.grid().spacing();
}

QuadraticForm stein_dissipation(const GridDensity1D& rho, const Potential& potential, const Kernel& kernel,
                                ConvolutionMethod method) {
  const auto& grid = rho.grid();
  const double dx = grid.spacing();
  const Vector x = grid.centers();
  Vector s = central_difference(rho.values(), dx);
  Vector xi(1);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xi[0] = x[i];
    s[i] += rho.values()[i] * potential.gradient(xi)[0];
  }
  Vector z(1);
  auto k = [&](double r) {
    z[0] = r;
    return kernel.value(z);
  };
  QuadraticForm out;
  out.value = s.dot(grid_convolve(s, dx, k, 0.0, method)) * dx;
  const Vector abs_s = s.cwiseAbs();
  out.scale = abs_s.dot(grid_convolve(abs_s, dx, k, 0.0, method)) * dx;
  return out;
}

double quadratic_form_dft(const Vector& s, double dx, const Kernel& kernel) {
  const Eigen::Index n = s.size();
  std::size_t m = 1;
  while (m < static_cast<std::size_t>(2 * n)) m <<= 1;
  std::vector<double> sv(m, 0.0), kv(m, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) sv[static_cast<std::size_t>(i)] = s[i];
  Vector z(1);
  for (std::size_t q = 0; q < m; ++q) {
    const double lag = q < m / 2 ? static_cast<double>(q) : static_cast<double>(q) - static_cast<double>(m);
    z[0] = lag * dx;
    kv[q] = kernel.value(z);
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> sh, kh;
  fft.fwd(sh, sv);
  fft.fwd(kh, kv);
  double total = 0.0;
  for (std::size_t q = 0; q < m; ++q) total += std::norm(sh[q]) * kh[q].real();
  return total * dx * dx / static_cast<double>(m);
}

}  // namespace steinlab
