#include "steinlab/assumptions.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

namespace steinlab {

namespace {

// Least-squares slope of ys against xs.
double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const auto n = static_cast<double>(xs.size());
  if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

Vector scalar_point(double v) { return Vector::Constant(1, v); }

}  // namespace

AssumptionReport check_growth(const Potential& potential, const std::vector<double>& probe_radii, Eigen::Index dim,
                              std::optional<double> declared) {
  require(!probe_radii.empty(), "growth check needs probe radii");
  require(std::is_sorted(probe_radii.begin(), probe_radii.end()) &&
              std::adjacent_find(probe_radii.begin(), probe_radii.end()) == probe_radii.end(),
          "probe radii must be strictly increasing");
  require(probe_radii.back() >= 10.0, "largest probe radius must be at least 10");
  require(probe_radii.front() > 0.0, "probe radii must be positive");
  require(dim >= 1, "dimension must be positive");

  const double p = declared.value_or(potential.declared_growth());
  AssumptionReport report;
  report.name = "growth";
  std::ostringstream probes;
  probes << "probe-based: " << probe_radii.size() << " radii in [" << probe_radii.front() << ", " << probe_radii.back()
         << "] on " << (dim == 1 ? 2 : 2 * dim + 2) << " rays; slope fitted over the outer half";
  report.probes = probes.str();

  std::vector<Vector> rays;
  for (Eigen::Index k = 0; k < dim; ++k) {
    Vector e = Vector::Zero(dim);
    e[k] = 1.0;
    rays.push_back(e);
    rays.push_back(-e);
  }
  if (dim > 1) {
    rays.push_back(Vector::Constant(dim, 1.0 / std::sqrt(static_cast<double>(dim))));
    rays.push_back(-rays.back());
  }

  const std::size_t first_fit = probe_radii.size() / 2;
  bool pass = true;
  double c_needed = 0.0;
  Vector c_point = Vector::Zero(dim);
  for (const auto& u : rays) {
    std::vector<double> lr, lv;
    for (std::size_t i = 0; i < probe_radii.size(); ++i) {
      const double r = probe_radii[i];
      const Vector x = r * u;
      const double v = potential.value(x);
      if (!std::isfinite(v)) {
        report.witnesses.push_back({"probe overflow at radius " + std::to_string(r), x, v});
        report.pass = false;
        return report;
      }
      const double rp = std::pow(r, p);
      double c = v / (rp + 1.0);
      if (rp > 1.0) c = std::max(c, v > 0.0 ? (rp - 1.0) / v : std::numeric_limits<double>::infinity());
      if (c > c_needed) {
        c_needed = c;
        c_point = x;
      }
      if (i >= first_fit && v > 0.0) {
        lr.push_back(std::log(r));
        lv.push_back(std::log(v));
      }
    }
    const double slope = fit_slope(lr, lv);
    report.witnesses.push_back({"fitted log-log slope", u, slope});
    if (!(std::abs(slope - p) <= 0.2)) pass = false;
  }
  report.witnesses.push_back({"smallest sandwich constant C", c_point, c_needed});
  if (!(c_needed <= 1e6)) pass = false;
  report.pass = pass;
  return report;
}

AssumptionReport check_condition_B3(const Potential& potential, const Kernel& kernel, const B3ProbeGrid& grid) {
  require(grid.max_radius >= 20.0, "probe grid must reach radius 20");
  require(grid.radius_step > 0.0 && grid.y_spacing > 0.0 && grid.y_halfwidth > 0.0, "probe grid spacings must be positive");
  require(potential.dimension() == 0 || potential.dimension() == grid.dim, "potential dimension does not match the grid");
  const Eigen::Index d = grid.dim;
  const double h = kernel.bandwidth();
  const double halfwidth = grid.y_halfwidth * h;
  const auto ny = static_cast<Eigen::Index>(std::ceil(2.0 * halfwidth / grid.y_spacing)) + 1;
  const double dy = 2.0 * halfwidth / static_cast<double>(ny - 1);

  AssumptionReport report;
  report.name = "growth_at_infinity";
  std::ostringstream probes;
  probes << "probe-based: x = +-r e_1 for r in [0, " << grid.max_radius << "] step " << grid.radius_step
         << "; y = x + s e_1, |s| <= " << halfwidth << " spacing " << dy << "; BL norm = max(sup, slope)";
  report.probes = probes.str();

  struct Probe {
    double radius;
    double norm[2];
    Witness where[2];
  };
  std::vector<Probe> results;

  Vector x(d), y(d), gv_x(d), gv_y(d), diff(d), gk(d);
  bool finite = true;
  const auto nr = static_cast<Eigen::Index>(std::floor(grid.max_radius / grid.radius_step + 1e-9)) + 1;
  for (Eigen::Index ir = 0; ir < nr; ++ir) {
    const double r = static_cast<double>(ir) * grid.radius_step;
    Probe probe{r, {0.0, 0.0}, {}};
    for (double sign : {1.0, -1.0}) {
      x.setZero();
      x[0] = sign * r;
      potential.gradient_into({x.data(), static_cast<std::size_t>(d)}, {gv_x.data(), static_cast<std::size_t>(d)});
      double prev[2] = {0, 0};
      double sup[2] = {0, 0}, lip[2] = {0, 0};
      double arg[2] = {0, 0};
      for (Eigen::Index k = 0; k < ny; ++k) {
        y = x;
        y[0] += -halfwidth + static_cast<double>(k) * dy;
        diff = x - y;
        const double kv = kernel.value_and_gradient({diff.data(), static_cast<std::size_t>(d)},
                                                    {gk.data(), static_cast<std::size_t>(d)});
        potential.gradient_into({y.data(), static_cast<std::size_t>(d)}, {gv_y.data(), static_cast<std::size_t>(d)});
        const double weight = 1.0 + potential.value(y);
        const double g[2] = {gv_x.dot(gk) / weight, gv_x.dot(gv_y) * kv / weight};
        for (int q = 0; q < 2; ++q) {
          if (!std::isfinite(g[q])) finite = false;
          if (std::abs(g[q]) > sup[q]) {
            sup[q] = std::abs(g[q]);
            arg[q] = y[0];
          }
          if (k > 0) lip[q] = std::max(lip[q], std::abs(g[q] - prev[q]) / dy);
          prev[q] = g[q];
        }
      }
      for (int q = 0; q < 2; ++q) {
        const double norm = std::max(sup[q], lip[q]);
        if (!(norm <= probe.norm[q])) {
          probe.norm[q] = norm;
          Vector pt(2);
          pt << x[0], arg[q];
          probe.where[q] = {q == 0 ? "g1 BL norm at (x, argmax y)" : "g2 BL norm at (x, argmax y)", pt, norm};
        }
      }
    }
    results.push_back(probe);
  }

  bool pass = finite;
  for (int q = 0; q < 2; ++q) {
    std::vector<double> lr, lv;
    double best = -1.0;
    Witness best_w{q == 0 ? "g1 BL norm" : "g2 BL norm", scalar_point(0.0), 0.0};
    for (const auto& probe : results) {
      if (probe.norm[q] > best) {
        best = probe.norm[q];
        if (!probe.where[q].label.empty()) best_w = probe.where[q];
      }
      if (probe.radius >= 0.5 * grid.max_radius && probe.radius > 0.0 && probe.norm[q] > 0.0) {
        lr.push_back(std::log(probe.radius));
        lv.push_back(std::log(probe.norm[q]));
      }
    }
    report.witnesses.push_back(best_w);
    // All-zero norms have no trend.
    const double slope = lr.size() >= 2 ? fit_slope(lr, lv) : 0.0;
    report.witnesses.push_back({q == 0 ? "g1 outer log-log slope" : "g2 outer log-log slope",
                                scalar_point(grid.max_radius), slope});
    if (!std::isfinite(best) || !(slope <= 0.25)) pass = false;
  }
  if (!finite) report.witnesses.push_back({"non-finite value", scalar_point(0.0), std::numeric_limits<double>::quiet_NaN()});
  report.pass = pass;
  return report;
}

AssumptionReport check_positive_definite(const Kernel& kernel, Eigen::Index n, double spacing) {
  require(n >= 256 && (n & (n - 1)) == 0, "positive-definiteness grid size must be a power of two >= 256");
  if (spacing <= 0.0) spacing = kernel.bandwidth() / 16.0;

  std::vector<double> samples(static_cast<std::size_t>(n));
  Vector x(1);
  for (Eigen::Index k = 0; k < n; ++k) {
    x[0] = static_cast<double>(k < n / 2 ? k : k - n) * spacing;
    samples[static_cast<std::size_t>(k)] = kernel.value(x);
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, samples);

  double max_abs = 0.0, min_re = std::numeric_limits<double>::infinity(), max_im = 0.0;
  Eigen::Index arg_min = 0, arg_im = 0;
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    max_abs = std::max(max_abs, std::abs(spectrum[k]));
    if (spectrum[k].real() < min_re) {
      min_re = spectrum[k].real();
      arg_min = static_cast<Eigen::Index>(k);
    }
    if (std::abs(spectrum[k].imag()) > max_im) {
      max_im = std::abs(spectrum[k].imag());
      arg_im = static_cast<Eigen::Index>(k);
    }
  }

  AssumptionReport report;
  report.name = "positive_definite";
  std::ostringstream probes;
  probes << "probe-based: DFT of " << n << " periodic samples, spacing " << spacing;
  report.probes = probes.str();
  report.witnesses.push_back({"min real part of DFT (frequency index)", scalar_point(static_cast<double>(arg_min)), min_re});
  report.witnesses.push_back({"max |imaginary part| of DFT (frequency index)", scalar_point(static_cast<double>(arg_im)), max_im});
  report.witnesses.push_back({"max |DFT|", scalar_point(0.0), max_abs});
  report.pass = max_abs > 0.0 && min_re >= -1e-8 * max_abs && max_im <= 1e-8 * max_abs;
  return report;
}

}  // namespace steinlab
