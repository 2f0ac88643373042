// Acceptance harness: one PASS/FAIL line per criterion, tolerances pinned below.
#include "steinlab/analysis.hpp"
#include "steinlab/assumptions.hpp"
#include "steinlab/config.hpp"
#include "steinlab/dynamics.hpp"
#include "steinlab/experiments.hpp"
#include "steinlab/meanfield1d.hpp"
#include "steinlab/metrics.hpp"
#include "steinlab/parallel.hpp"
#include "steinlab/persistence.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

using namespace steinlab;

namespace {

// Criterion 1
constexpr double kCancelRelResidual = 1e-4;
constexpr double kCancelRefinementFactor = 4.0;
constexpr double kCancelRhsSlack = 1e-10;
constexpr double kCancelSecondsPerCase = 10.0;
// Criterion 2
constexpr double kPdeKlIncrease = 1e-8;
constexpr double kPdeMassDrift = 1e-12;
constexpr double kPdeBalanceRefinement = 2.0;
constexpr double kPdeSeconds = 60.0;
// Criterion 3
constexpr int kOracleResolution = 41;
constexpr double kOracleSpacing = 2.0 / (kOracleResolution - 1);
constexpr double kWassersteinExact = 1e-10;
constexpr double kMetricSeconds = 60.0;
// Criterion 4
constexpr double kClosedFormTol = 1e-6;
constexpr double kOrderTol = 0.3;
constexpr double kClosedFormSeconds = 5.0;
// Criterion 5
constexpr double kCertificateFraction = 0.9;
constexpr double kStabilitySeconds = 30 * 60.0;
// Criterion 6
constexpr double kConvergenceSeconds = 15 * 60.0;
// Criterion 7
constexpr double kAssumptionSeconds = 10.0;
// Criterion 8
constexpr double kTrendPValue = 0.05;
constexpr double kLipschitzSeconds = 10 * 60.0;
// Criterion 9
constexpr unsigned kAlternateThreads = 3;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void report(int id, const std::string& name, Verdict& v, double seconds) {
  std::printf("criterion %d %s: %s (%.1f s)%s\n", id, v.pass ? "PASS" : "FAIL", name.c_str(), seconds,
              v.detail.str().c_str());
  std::fflush(stdout);
  if (!v.pass) ++failures;
}

void guarded(int id, const std::string& name, const std::function<void(Verdict&)>& body) {
  Verdict v;
  const auto t0 = Clock::now();
  try {
    body(v);
  } catch (const std::exception& e) {
    v.check(false, std::string("exception: ") + e.what());
  }
  report(id, name, v, since(t0));
}

const PotentialPtr kQuadratic = make_quadratic_potential();
const KernelPtr kGauss = make_gaussian_kernel(1.0);

// --- 1 ---------------------------------------------------------------------------
void cancellation(Verdict& v) {
  const TargetDensity target(kQuadratic, Box::cube(1, -12, 12));
  const std::vector<std::pair<std::string, std::function<double(double)>>> cases{
      {"sin x", [](double x) { return std::sin(x); }},
      {"x exp(-x^2/4)", [](double x) { return x * std::exp(-x * x / 4); }},
      {"(1+x+x^2) exp(-x^2/8)", [](double x) { return (1 + x + x * x) * std::exp(-x * x / 8); }}};
  for (const auto& [label, phi] : cases) {
    const auto t0 = Clock::now();
    auto at = [&](Eigen::Index n) {
      return cancellation_residual(GridField1D::from_function(UniformGrid1D(-12, 12, n), phi), target, *kGauss);
    };
    const auto r = at(2048);
    const double seconds = since(t0);
    const auto fine = at(4096);
    const double rel = r.residual / std::max(std::abs(r.rhs), 1e-12);
    const double ratio = r.residual / fine.residual;
    v.detail << " " << label << ": rel " << rel << ", x" << ratio << " at n=4096;";
    v.check(rel < kCancelRelResidual, label + " relative residual");
    v.check(ratio >= kCancelRefinementFactor, label + " refinement");
    v.check(r.rhs >= -kCancelRhsSlack * r.scale && fine.rhs >= -kCancelRhsSlack * fine.scale, label + " rhs sign");
    v.check(seconds < kCancelSecondsPerCase, label + " runtime");
  }
}

// --- 2 ---------------------------------------------------------------------------
void kl_dissipation(Verdict& v) {
  const TargetDensity target(kQuadratic, Box::cube(1, -12, 12));
  auto start = [](const UniformGrid1D& g) {
    return GridDensity1D::from_function(g, [](double x) { return std::exp(-0.5 * (x - 1) * (x - 1)); });
  };
  const UniformGrid1D g(-12, 12, 512), g2(-12, 12, 1024);
  const auto rho0 = start(g);
  const double dt = 0.5 * g.spacing() / std::max(1.0, face_velocity(rho0, *kQuadratic, *kGauss).cwiseAbs().maxCoeff());
  const auto t0 = Clock::now();
  const auto coarse = run_pde(rho0, target_on_grid(target, g), *kQuadratic, *kGauss, dt, 5.0);
  const double seconds = since(t0);
  const auto fine = run_pde(start(g2), target_on_grid(target, g2), *kQuadratic, *kGauss, dt / 2, 5.0);
  const double ratio = coarse.max_balance_error / fine.max_balance_error;
  v.detail << " KL " << coarse.diagnostics.kl.front() << " -> " << coarse.diagnostics.kl.back() << ", dt " << dt
           << ", max KL increase " << coarse.max_kl_increase << ", mass drift " << coarse.max_mass_drift
           << ", balance error " << coarse.max_balance_error << " -> " << fine.max_balance_error << " (x" << ratio << ")";
  v.check(coarse.max_kl_increase <= kPdeKlIncrease, "KL increase");
  v.check(coarse.max_mass_drift <= kPdeMassDrift, "mass drift");
  v.check(ratio >= kPdeBalanceRefinement, "balance refinement");
  v.check(seconds < kPdeSeconds, "runtime");
}

// --- 3 ---------------------------------------------------------------------------
double permutation_minimum(const ParticleEnsemble& a, const ParticleEnsemble& b) {
  std::vector<int> perm(static_cast<std::size_t>(a.size()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) cost += (a.position(static_cast<Eigen::Index>(i)) - b.position(perm[i])).norm();
    best = std::min(best, cost / static_cast<double>(perm.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

void metric_oracles(Verdict& v) {
  const auto t0 = Clock::now();
  Philox rng(Philox::stream_key(2024, 3));
  double worst_bl = 0.0;
  int bl_bad = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index atoms = 1 + static_cast<Eigen::Index>(rng.next_u32() % 4);
    const Eigen::Index d = trial % 2 == 0 ? 1 : 2;
    PointCloud p(d, atoms);
    Vector w(atoms);
    for (Eigen::Index i = 0; i < atoms; ++i) {
      for (Eigen::Index k = 0; k < d; ++k) p(k, i) = 3.0 * (2.0 * rng.uniform() - 1.0);
      w[i] = 2.0 * rng.uniform() - 1.0;
    }
    const SignedDiscreteMeasure mu(p, w);
    const LPResult lp = bl_weighted_norm(mu, kQuadratic.get());
    const double oracle = bl_bruteforce_oracle(mu, kQuadratic.get(), kOracleResolution);
    // The oracle rounds phi to a grid of spacing h; each atom can lose at most
    // h |c_i|, so the admissible gap is 2 h max(1, sum |c_i|).
    double c_abs = 0.0;
    const auto canon = mu.canonicalize();
    for (Eigen::Index i = 0; i < canon.size(); ++i)
      c_abs += std::abs(canon.weights()[i]) * (1.0 + kQuadratic->value(canon.positions().col(i)));
    const double tol = 2.0 * kOracleSpacing * std::max(1.0, c_abs);
    worst_bl = std::max(worst_bl, std::abs(lp.value - oracle) / tol);
    if (!(std::abs(lp.value - oracle) <= tol && oracle <= lp.value + 1e-9 && lp.status == "optimal" &&
          bl_feasible(mu, lp.phi)))
      ++bl_bad;
  }
  double worst_perm = 0.0, worst_1d = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    PointCloud a(2, 3), b(2, 3);
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index k = 0; k < 2; ++k) {
        a(k, i) = rng.normal();
        b(k, i) = rng.normal();
      }
    worst_perm = std::max(worst_perm, std::abs(wasserstein_assignment(1.0, ParticleEnsemble(a), ParticleEnsemble(b)) -
                                               permutation_minimum(ParticleEnsemble(a), ParticleEnsemble(b))));
  }
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.next_u32() % 64);
    PointCloud a(1, n), b(1, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      a(0, i) = rng.normal();
      b(0, i) = 2.0 * rng.normal() + 0.5;
    }
    worst_1d = std::max(worst_1d, std::abs(wasserstein_assignment(1.0, ParticleEnsemble(a), ParticleEnsemble(b)) -
                                           wasserstein_1d(1.0, ParticleEnsemble(a), ParticleEnsemble(b))));
  }
  const double seconds = since(t0);
  v.detail << " BL oracle gap/tolerance max " << worst_bl << " (" << bl_bad << " of 50 outside)"
           << ", assignment vs permutations " << worst_perm << ", assignment vs sorted " << worst_1d;
  v.check(bl_bad == 0, "BL oracle");
  v.check(worst_perm <= kWassersteinExact, "assignment vs brute force");
  v.check(worst_1d <= kWassersteinExact, "assignment vs 1-D");
  v.check(seconds < kMetricSeconds, "runtime");
}

// --- 4 ---------------------------------------------------------------------------
void closed_form(Verdict& v) {
  const auto t0 = Clock::now();
  const auto one = ParticleEnsemble::from_values({1.0});
  const double x1 = integrate(one, *kQuadratic, *kGauss, 0.0, 1.0, 0.01).snapshots.back().positions()(0, 0);
  const double err = std::abs(x1 - std::exp(-1.0));
  const std::vector<double> dts{0.1, 0.05, 0.025};
  double orders[2];
  for (int m = 0; m < 2; ++m) {
    std::vector<double> e;
    for (double dt : dts)
      e.push_back(std::abs(integrate(one, *kQuadratic, *kGauss, 0.0, 1.0, dt, m == 0 ? Integrator::euler : Integrator::rk4, 1000)
                               .snapshots.back()
                               .positions()(0, 0) -
                           std::exp(-1.0)));
    orders[m] = std::log(e[1] / e[2]) / std::log(2.0);
  }
  const double seconds = since(t0);
  v.detail << " |x(1) - e^-1| = " << err << ", euler order " << orders[0] << ", rk4 order " << orders[1];
  v.check(err <= kClosedFormTol, "closed form");
  v.check(std::abs(orders[0] - 1.0) <= kOrderTol, "euler order");
  v.check(std::abs(orders[1] - 4.0) <= kOrderTol, "rk4 order");
  v.check(seconds < kClosedFormSeconds, "runtime");
}

// --- 5 ---------------------------------------------------------------------------
Config stability_config() {
  return Config::parse(
      "potential = quadratic\nkernel = gaussian\nn_list = 50, 100, 200, 400\nreplicates = 8\nt_max = 20\n"
      "dt = 0.01\nsnapshot_interval = 0.1\ndeparture_factor = 2\npilot_n = 50\ncalibration = fit\nseed = 7\n");
}

void stability(Verdict& v, const std::string& out) {
  const auto t0 = Clock::now();
  const auto r = run_stability_sweep(stability_config(), out);
  const double seconds = since(t0);
  bool monotone = true;
  int departures = 0;
  for (const auto& run : r.runs)
    if (run.departure) ++departures;
  v.detail << " C = " << (r.constant ? format_number(*r.constant) : "none") << "; median departure";
  for (std::size_t k = 0; k < r.median_departure.size(); ++k) {
    v.detail << " N=" << r.median_departure[k].first << ":"
             << (std::isinf(r.median_departure[k].second) ? "none" : format_number(r.median_departure[k].second));
    if (k > 0 && !(r.median_departure[k].second >= r.median_departure[k - 1].second)) monotone = false;
  }
  v.detail << "; " << departures << " of " << r.runs.size() << " runs depart; certificate pass fraction "
           << r.certificate_pass_fraction;
  std::size_t checked = 0;
  for (const auto& run : r.runs)
    if (run.certificate) checked += run.certificate_checked;
  v.detail << " over " << checked << " in-regime samples";
  for (const auto& run : r.runs) v.check(run.status == "ok", "run status " + run.status);
  v.check(r.constant.has_value(), "calibration");
  v.check(monotone, "median departure nondecreasing");
  v.check(r.certificate_pass_fraction >= kCertificateFraction, "certificate fraction");
  v.check(seconds < kStabilitySeconds, "runtime");
}

// --- 6 ---------------------------------------------------------------------------
Config convergence_config() {
  return Config::parse(
      "potential = quadratic\nkernel = gaussian\nschedule = auto\ncalibration = fit\npilot_n = 64\npilot_t = 1\n"
      "schedule_step = 0.5\nschedule_points = 12\nschedule_cap = 1024\nq = 1\nreplicates = 8\ndt = 0.01\n"
      "init = gaussian\ninit_mean = 2\ninit_std = 0.5\nseed = 7\n");
}

void convergence(Verdict& v, const std::string& out) {
  const auto t0 = Clock::now();
  const auto r = run_convergence_sweep(convergence_config(), out);
  const double seconds = since(t0);
  v.detail << " C = " << r.constant << " (pilot amplification " << r.pilot_amplification << "); median W1";
  for (const auto& p : r.pairs) v.detail << " (t=" << p.t << ",N=" << p.n << "):" << p.median;
  v.detail << "; " << r.notes.size() << " pairs skipped";
  v.check(r.pairs.size() >= 3, "at least three pairs");
  v.check(r.strictly_decreasing, "strict decrease");
  v.check(seconds < kConvergenceSeconds, "runtime");
}

// --- 7 ---------------------------------------------------------------------------
void assumptions(Verdict& v) {
  const auto t0 = Clock::now();
  const auto p1 = check_condition_B3(*make_smoothed_abs_potential(), *kGauss);
  const auto p2 = check_condition_B3(*kQuadratic, *kGauss);
  const auto p4 = check_condition_B3(*make_quartic_potential(), *kGauss);
  const auto gauss = check_positive_definite(*kGauss);
  const auto tri = check_positive_definite(*make_triangle_kernel(1.0));
  const auto box = check_positive_definite(*make_box_kernel(1.0));
  const double seconds = since(t0);
  auto w = [](const AssumptionReport& r, std::size_t i) { return i < r.witnesses.size() ? r.witnesses[i].value : NAN; };
  v.detail << " B3 slopes (g1, g2): p=1 (" << w(p1, 1) << ", " << w(p1, 3) << "), p=2 (" << w(p2, 1) << ", " << w(p2, 3)
           << "), p=4 (" << w(p4, 1) << ", " << w(p4, 3) << "); min DFT: gaussian " << w(gauss, 0) << ", triangle "
           << w(tri, 0) << ", box " << w(box, 0);
  v.check(p1.pass && p2.pass, "p <= 2 pass");
  v.check(!p4.pass && !p4.witnesses.empty(), "p = 4 fails with witnesses");
  v.check(gauss.pass && tri.pass, "positive-definite kernels");
  v.check(!box.pass && !box.witnesses.empty(), "indicator kernel fails");
  v.check(seconds < kAssumptionSeconds, "runtime");
}

// --- 8 ---------------------------------------------------------------------------
void time_lipschitz(Verdict& v) {
  const auto t0 = Clock::now();
  const TargetDensity target(kQuadratic, Box::cube(1, -12, 12));
  Philox rng(Philox::stream_key(7, 100, 0));
  const auto start = sample_target(target, 100, rng);
  const auto rec = integrate(start, *kQuadratic, *kGauss, 0.0, 10.0, 0.01, Integrator::rk4, 10);
  std::vector<double> mid, ratio;
  for (std::size_t k = 1; k < rec.snapshots.size(); ++k) {
    const double d = bl_weighted_norm(subtract(rec.snapshots[k], rec.snapshots[k - 1]), kQuadratic.get()).value;
    mid.push_back(0.5 * (rec.times[k] + rec.times[k - 1]));
    ratio.push_back(d / (rec.times[k] - rec.times[k - 1]));
  }
  const double seconds = since(t0);
  const double peak = *std::max_element(ratio.begin(), ratio.end());
  const auto trend = spearman(mid, ratio);
  v.detail << " max ratio " << peak << " over " << ratio.size() << " snapshot pairs; Spearman rho " << trend.rho
           << ", p(increasing) " << trend.p_increasing;
  v.check(std::isfinite(peak), "finite maximum");
  v.check(trend.p_increasing > kTrendPValue, "no increasing trend");
  v.check(seconds < kLipschitzSeconds, "runtime");
}

// --- 9 ---------------------------------------------------------------------------
bool same_files(const std::string& a, const std::string& b, Verdict& v) {
  namespace fs = std::filesystem;
  bool same = true;
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const std::string name = entry.path().filename().string();
    if (name == "timing.log") continue;
    ++compared;
    if (!fs::exists(fs::path(b) / name) || read_file(entry.path().string()) != read_file((fs::path(b) / name).string())) {
      same = false;
      v.detail << " differs: " << name << ";";
    }
  }
  return same && compared > 0;
}

void determinism(Verdict& v, const std::string& work) {
  // Criterion 4 as a persisted run, and full reruns of 5 and 6 with more workers.
  const Config single = Config::parse("n = 1\ninit = gaussian\ninit_mean = 1\ninit_std = 1e-300\nt_max = 1\ndt = 0.01\n"
                                      "snapshot_interval = 0.01\nseed = 7\n");
  set_worker_count(1);
  run_simulate(single, work + "/c4_threads1");
  set_worker_count(kAlternateThreads);
  run_simulate(single, work + "/c4_threads3");
  run_stability_sweep(stability_config(), work + "/c5_threads3");
  run_convergence_sweep(convergence_config(), work + "/c6_threads3");
  set_worker_count(1);
  const bool s4 = same_files(work + "/c4_threads1", work + "/c4_threads3", v);
  const bool s5 = same_files(work + "/c5_threads1", work + "/c5_threads3", v);
  const bool s6 = same_files(work + "/c6_threads1", work + "/c6_threads3", v);
  v.detail << " criterion 4 files " << (s4 ? "identical" : "DIFFER") << ", criterion 5 files "
           << (s5 ? "identical" : "DIFFER") << ", criterion 6 files " << (s6 ? "identical" : "DIFFER") << " (threads 1 vs "
           << kAlternateThreads << ", " << std::thread::hardware_concurrency() << " hardware threads)";
  v.check(s4 && s5 && s6, "byte-identical outputs");
}

}  // namespace

int main(int argc, char** argv) {
  std::string work = "acceptance_runs";
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--workdir") == 0 && i + 1 < argc) work = argv[++i];
    else only.push_back(std::atoi(argv[i]));
  }
  auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
  std::filesystem::remove_all(work);
  std::filesystem::create_directories(work);
  set_worker_count(1);

  if (wanted(1)) guarded(1, "cancellation identity", cancellation);
  if (wanted(2)) guarded(2, "KL dissipation along the PDE", kl_dissipation);
  if (wanted(3)) guarded(3, "metric oracles", metric_oracles);
  if (wanted(4)) guarded(4, "single-particle closed form", closed_form);
  if (wanted(5) || wanted(9))
    guarded(5, "stability horizon", [&](Verdict& v) { stability(v, work + "/c5_threads1"); });
  if (wanted(6) || wanted(9))
    guarded(6, "convergence sweep", [&](Verdict& v) { convergence(v, work + "/c6_threads1"); });
  if (wanted(7)) guarded(7, "assumption dichotomy", assumptions);
  if (wanted(8)) guarded(8, "time-Lipschitz continuity", time_lipschitz);
  if (wanted(9)) guarded(9, "determinism across thread counts", [&](Verdict& v) { determinism(v, work); });
  std::printf("%s: %d failing criteria\n", failures == 0 ? "ALL PASS" : "SOME FAIL", failures);
  return failures == 0 ? 0 : 1;
}
