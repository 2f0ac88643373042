// stein-lab: command-line front end for the SVGD numerical lab.
#include "steinlab/config.hpp"
#include "steinlab/experiments.hpp"
#include "steinlab/parallel.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

using namespace steinlab;

namespace {

struct CommonOptions {
  std::string config;
  std::string out;
  std::string seed;
  unsigned threads = 0;
};

void add_common(CLI::App* sub, CommonOptions& o, bool needs_out = true) {
  sub->add_option("--config", o.config, "key = value configuration file")->required()->check(CLI::ExistingFile);
  if (needs_out) sub->add_option("--out", o.out, "output directory (overrides `out` in the config)");
  sub->add_option("--seed", o.seed, "random seed (overrides `seed` in the config)");
  sub->add_option("--threads", o.threads, "worker threads for the velocity loop");
}

Config load(const CommonOptions& o) {
  Config config = Config::load(o.config);
  if (!o.seed.empty()) config.set("seed", o.seed);
  if (!o.out.empty()) config.set("out", o.out);
  const unsigned threads = o.threads > 0 ? o.threads : static_cast<unsigned>(config.get_int("threads", 1));
  set_worker_count(threads);
  return config;
}

std::string out_dir(const Config& config) { return config.get_string("out", "out"); }

int simulate(const CommonOptions& o) {
  const Config config = load(o);
  const SimulateResult r = run_simulate(config, out_dir(config));
  std::printf("simulate: %zu snapshots, final BL*_V distance %.6g, status %s\n", r.series.values.size(),
              r.series.values.empty() ? 0.0 : r.series.values.back(), r.status.c_str());
  return 0;
}

int stability(const CommonOptions& o) {
  const Config config = load(o);
  const StabilitySweepResult r = run_stability_sweep(config, out_dir(config));
  std::printf("%8s %12s %16s\n", "N", "mean m0", "median t_dep");
  for (std::size_t k = 0; k < r.median_departure.size(); ++k)
    std::printf("%8ld %12.5g %16.5g\n", static_cast<long>(r.median_departure[k].first), r.mean_m0[k].second,
                r.median_departure[k].second);
  if (r.constant)
    std::printf("C = %.6g (pilot N = %ld), certificate pass fraction %.3f\n", *r.constant, static_cast<long>(r.pilot_n),
                r.certificate_pass_fraction);
  else
    std::printf("C could not be calibrated on the pilot runs\n");
  return 0;
}

int convergence(const CommonOptions& o) {
  const Config config = load(o);
  const ConvergenceSweepResult r = run_convergence_sweep(config, out_dir(config));
  std::printf("C = %.6g, pilot amplification %.6g\n", r.constant, r.pilot_amplification);
  for (const auto& p : r.pairs) std::printf("t = %-6g N = %-8lu median W = %.6g\n", p.t, static_cast<unsigned long>(p.n), p.median);
  for (const auto& n : r.notes) std::printf("note: %s\n", n.c_str());
  std::printf("strictly decreasing: %s\n", r.strictly_decreasing ? "yes" : "no");
  return 0;
}

int pde(const CommonOptions& o) {
  const Config config = load(o);
  const PdeRun r = run_pde_experiment(config, out_dir(config));
  std::printf("pde1d: KL %.6g -> %.6g, max KL increase %.3g, max mass drift %.3g, max balance error %.3g\n",
              r.diagnostics.kl.front(), r.diagnostics.kl.back(), r.max_kl_increase, r.max_mass_drift,
              r.max_balance_error);
  return 0;
}

int assumptions(const CommonOptions& o) {
  const Config config = load(o);
  for (const auto& rep : run_check_assumptions(config, out_dir(config))) {
    std::printf("%-20s %s  (%s)\n", rep.name.c_str(), rep.pass ? "pass" : "FAIL", rep.probes.c_str());
    for (const auto& w : rep.witnesses) std::printf("    %s: %.6g\n", w.label.c_str(), w.value);
  }
  return 0;
}

int metric(const CommonOptions& o) {
  const Config config = load(o);
  const MetricResult r = run_metric(config, config.has("out") ? out_dir(config) : std::string());
  std::printf("%s = %.17g (%ld atoms, %s)\n", r.metric.c_str(), r.value, static_cast<long>(r.atoms), r.status.c_str());
  return 0;
}

int audit(const CommonOptions& o, const std::string& run_dir) {
  const Config config = load(o);
  const AuditResult r = run_audit(config, run_dir);
  std::printf("audit %s: %zu snapshots, max difference %.3g\n", r.pass ? "pass" : "FAIL", r.checked, r.max_difference);
  return r.pass ? 0 : 3;
}

int bayes(const CommonOptions& o) {
  const Config config = load(o);
  const BayesResult r = run_bayes_demo(config, out_dir(config));
  Eigen::IOFormat fmt(6, Eigen::DontAlignCols, ", ", "; ", "", "", "[", "]");
  std::cout << "ensemble mean   " << r.ensemble_mean.transpose().format(fmt) << '\n'
            << "quadrature mean " << r.quadrature_mean.transpose().format(fmt) << '\n';
  if (r.conjugate_mean) std::cout << "conjugate mean  " << r.conjugate_mean->transpose().format(fmt) << '\n';
  std::cout << "ensemble cov    " << r.ensemble_covariance.format(fmt) << '\n'
            << "quadrature cov  " << r.quadrature_covariance.format(fmt) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stein-lab: Stein variational gradient descent experiments"};
  app.require_subcommand(1);
  CommonOptions o;
  std::string run_dir;
  auto* sim = app.add_subcommand("simulate", "integrate one particle system and record its BL*_V distance");
  auto* sta = app.add_subcommand("stability-sweep", "departure times and stability certificate over an N list");
  auto* con = app.add_subcommand("convergence-sweep", "Wasserstein distance along a (t, N) schedule");
  auto* pd = app.add_subcommand("pde1d", "finite-volume mean-field solver in 1-D");
  auto* chk = app.add_subcommand("check-assumptions", "growth, B3 and positive-definiteness probes");
  auto* met = app.add_subcommand("metric", "BL*_V or Wasserstein distance between two measure files");
  auto* aud = app.add_subcommand("audit", "recompute a simulate run's series from its trajectory");
  auto* bay = app.add_subcommand("bayes", "SVGD on a Bayesian regression posterior");
  for (auto* s : {sim, sta, con, pd, chk, met, bay}) add_common(s, o);
  add_common(aud, o, false);
  aud->add_option("--run", run_dir, "directory written by `simulate`")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) return simulate(o);
    if (*sta) return stability(o);
    if (*con) return convergence(o);
    if (*pd) return pde(o);
    if (*chk) return assumptions(o);
    if (*met) return metric(o);
    if (*aud) return audit(o, run_dir);
    if (*bay) return bayes(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const PreconditionError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
