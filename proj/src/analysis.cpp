#include "steinlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace steinlab {

void NormSeries::validate() const {
  require(times.size() == values.size(), "series times and values differ in length");
  require(!times.empty(), "series is empty");
  for (std::size_t k = 0; k < times.size(); ++k) {
    require(std::isfinite(values[k]) && values[k] >= 0.0, "series values must be finite and nonnegative");
    if (k > 0) require(times[k] > times[k - 1], "series times must increase");
  }
}

std::optional<double> riccati_bound(double alpha, double c, double t) {
  require(alpha >= 0.0 && c > 0.0 && t >= 0.0, "riccati_bound needs alpha >= 0, C > 0, t >= 0");
  const double denom = 1.0 - c * t * alpha;
  if (denom <= 0.0) return std::nullopt;
  return alpha / denom;
}

GronwallVerdict gronwall_backward_check(const std::vector<double>& times, const std::vector<double>& f,
                                        const std::vector<double>& g, const std::vector<double>& h, double c) {
  const std::size_t n = times.size();
  require(n >= 1 && f.size() == n && g.size() == n && h.size() == n, "Gronwall samples must share the time grid");
  for (std::size_t k = 0; k < n; ++k) {
    require(f[k] >= 0.0 && g[k] >= 0.0 && h[k] >= 0.0, "Gronwall samples must be nonnegative");
    if (k > 0) {
      require(times[k] > times[k - 1], "Gronwall times must increase");
      require(h[k] <= h[k - 1], "h must be nonincreasing");
    }
  }
  GronwallVerdict out;
  out.worst_margin = std::numeric_limits<double>::infinity();
  out.pass = true;
  double tail = 0.0;  // int_{t_k}^T g
  for (std::size_t k = n; k-- > 0;) {
    if (k + 1 < n) tail += 0.5 * (g[k] + g[k + 1]) * (times[k + 1] - times[k]);
    const double bound = h[k] * std::exp(c * tail);
    const double margin = bound - f[k];
    if (margin < out.worst_margin) {
      out.worst_margin = margin;
      out.worst_index = k;
    }
    if (margin < -1e-12 * std::max(1.0, bound)) out.pass = false;
  }
  return out;
}

StabilityVerdict stability_certificate(const NormSeries& series, double c) {
  series.validate();
  require(c > 0.0, "stability constant must be positive");
  const double m0 = series.values.front();
  require(m0 > 0.0, "stability certificate needs values[0] > 0");
  StabilityVerdict out;
  out.pass = true;
  for (std::size_t k = 0; k < series.times.size(); ++k) {
    const double t = series.times[k];
    const double num = c * (t + 1.0) * m0;
    const double denom = 1.0 - num * t;
    out.bound.push_back(denom > 0.0 ? num / denom : std::numeric_limits<double>::infinity());
    const bool regime = denom >= 0.5;
    out.in_regime.push_back(regime);
    if (!regime) continue;
    ++out.checked;
    if (series.values[k] > out.bound.back() && !out.first_violation) {
      out.first_violation = k;
      out.pass = false;
    }
  }
  if (series.particles > 0) {
    const double n = static_cast<double>(series.particles);
    out.horizon = std::sqrt(n / (2.0 * c)) - 1.0;
    if (m0 <= 1.0 / n) {
      const double level = std::sqrt(2.0 / c) / std::sqrt(n);
      bool held = true;
      for (std::size_t k = 0; k < series.times.size() && series.times[k] <= out.horizon; ++k)
        if (series.values[k] > level) held = false;
      out.small_start_held = held;
    }
  } else {
    out.horizon = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

ScheduleValue double_exp_schedule(double c, double t) {
  require(c > 0.0 && t >= 0.0, "schedule needs C > 0 and t >= 0");
  constexpr std::uint64_t max_value = 0x7fffffffffffffffULL;
  const double exponent = 2.0 * c * std::exp(c * t);
  // exp(exponent) must stay below 2^63 - 1 with room for the ceiling.
  if (!std::isfinite(exponent) || exponent >= std::log(9.2e18)) return {max_value, true};
  return {static_cast<std::uint64_t>(std::ceil(std::exp(exponent))), false};
}

std::optional<double> fit_departure_time(const NormSeries& series, double factor) {
  if (!(factor > 1.0)) throw PreconditionError("departure factor must exceed 1");
  series.validate();
  const double level = factor * series.values.front();
  for (std::size_t k = 1; k < series.values.size(); ++k) {
    if (series.values[k] > level) {
      const double v0 = series.values[k - 1], v1 = series.values[k];
      const double t0 = series.times[k - 1], t1 = series.times[k];
      return t0 + (level - v0) / (v1 - v0) * (t1 - t0);
    }
  }
  return std::nullopt;
}

std::optional<double> calibrate_stability_constant(const std::vector<NormSeries>& pilot) {
  require(!pilot.empty(), "calibration needs at least one pilot series");
  for (double c = 1.0; c <= 1e6; c *= 1.02) {
    bool all = true;
    for (const auto& s : pilot)
      if (!stability_certificate(s, c).pass) {
        all = false;
        break;
      }
    if (all) return c;
  }
  return std::nullopt;
}

double calibrate_schedule_constant(double amplification, double t) {
  require(t >= 0.0 && std::isfinite(amplification), "schedule calibration needs t >= 0 and a finite amplification");
  const double target = std::max(1.0, amplification);
  auto f = [&](double c) { return c * std::exp(c * std::exp(c * t)); };
  double lo = 0.0, hi = 1.0;
  while (f(hi) < target) hi *= 2.0;
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) >= target ? hi : lo) = mid;
  }
  return hi;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

Spearman spearman(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 3, "Spearman needs at least three paired samples");
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  Spearman out;
  out.rho = (sxx > 0 && syy > 0) ? sxy / std::sqrt(sxx * syy) : 0.0;
  const double z = out.rho * std::sqrt(n - 1.0);
  out.p_increasing = 0.5 * std::erfc(z / std::sqrt(2.0));
  return out;
}

double median(std::vector<double> values) {
  require(!values.empty(), "median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  const double a = values[n / 2 - 1], b = values[n / 2];
  if (std::isinf(a) || std::isinf(b)) return std::isinf(a) ? a : b;
  return 0.5 * (a + b);
}

}  // namespace steinlab
