#pragma once

#include "steinlab/analysis.hpp"
#include "steinlab/assumptions.hpp"
#include "steinlab/config.hpp"
#include "steinlab/dynamics.hpp"
#include "steinlab/meanfield1d.hpp"
#include "steinlab/metrics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace steinlab {

/// Deterministic stand-in for rho_inf used by every distance: trapezoid
/// quadrature (`reference_atoms` per axis) for d <= 2, otherwise
/// `reference_atoms` i.i.d. samples from the seeded stream (seed, 0, 0).
struct Reference {
  TargetDensity target;
  SignedDiscreteMeasure measure;
  /// BL*_V distance between this reference and one built with twice the atoms;
  /// reported next to every metric value.
  double discretization_error = 0.0;
};

/// Truncation box: `box` (half-width, default: automatic from the potential).
Box box_from_config(const Config& config, const Potential& potential, Eigen::Index dim);
Reference make_reference(const Config& config, const PotentialPtr& potential, Eigen::Index dim);

/// ||rho^N - reference||_{BL*_V}.
LPResult distance_to_reference(const ParticleEnsemble& ensemble, const Reference& reference);

/// Initial ensemble: `init = target` samples rho_inf; `init = gaussian` draws
/// from N(init_mean, init_std^2 I).
ParticleEnsemble initial_ensemble(const Config& config, const Reference& reference, Eigen::Index n, Philox& rng);

// ---------------------------------------------------------------------------

struct SimulateResult {
  TrajectoryRecord record;
  NormSeries series;  ///< BL*_V distance to the reference per snapshot
  std::string status = "ok";
};

/// Keys: dim, n (N), seed, dt, t_max, snapshot_interval, integrator, init, ...
/// Writes trajectory.csv, trajectory.jsonl (metadata) and series.csv.
SimulateResult run_simulate(const Config& config, const std::string& out_dir);

struct StabilityRun {
  Eigen::Index n = 0;
  int replicate = 0;
  NormSeries series;
  double m0 = 0.0;
  std::optional<double> departure;
  std::string status = "ok";
  std::optional<bool> certificate;  ///< unset for the pilot N and failed runs
  std::size_t certificate_checked = 0;
};

struct StabilitySweepResult {
  std::vector<StabilityRun> runs;
  Eigen::Index pilot_n = 0;
  std::optional<double> constant;
  std::vector<std::pair<Eigen::Index, double>> median_departure;  ///< +inf for "none"
  std::vector<std::pair<Eigen::Index, double>> mean_m0;
  double certificate_pass_fraction = 0.0;
  std::string config_hash;
};

/// Keys: n_list, replicates, seed, dt, t_max, snapshot_interval, departure_factor,
/// calibration (`fit` or a number), pilot_n. Writes series.csv, summary.csv, sweep.jsonl.
StabilitySweepResult run_stability_sweep(const Config& config, const std::string& out_dir);

struct ConvergencePair {
  double t = 0.0;
  std::uint64_t n = 0;
  std::vector<double> distances;  ///< W_q per replicate
  double median = 0.0;
};

struct ConvergenceSweepResult {
  double constant = 0.0;
  double pilot_amplification = 0.0;
  std::vector<ConvergencePair> pairs;
  std::vector<std::string> notes;
  bool strictly_decreasing = false;
  std::string config_hash;
};

/// Keys: schedule (`auto` or `t:N, t:N, ...`), q, replicates, init_mean, init_std,
/// schedule_step, schedule_points, schedule_cap, calibration (`fit` or number),
/// pilot_n, pilot_t. Writes convergence.csv, convergence.jsonl.
ConvergenceSweepResult run_convergence_sweep(const Config& config, const std::string& out_dir);

/// Keys: cells, left, right, pde_dt (0 = CFL), t_max, init_mean, init_std,
/// scheme, stride. Writes pde_density.csv, pde_diagnostics.csv, pde.jsonl.
PdeRun run_pde_experiment(const Config& config, const std::string& out_dir);

/// Writes assumptions.jsonl; returns all reports.
std::vector<AssumptionReport> run_check_assumptions(const Config& config, const std::string& out_dir);

struct MetricResult {
  std::string metric;
  double value = 0.0;
  Eigen::Index atoms = 0;
  std::string status = "optimal";
};

/// Keys: metric (bl_weighted | bl_flat | wasserstein), measure_a, measure_b
/// (CSV files), q. Writes metric.jsonl.
MetricResult run_metric(const Config& config, const std::string& out_dir);

struct AuditResult {
  bool pass = false;
  std::size_t checked = 0;
  double max_difference = 0.0;
};

/// Recomputes series.csv of a simulate run from its trajectory.csv.
AuditResult run_audit(const Config& config, const std::string& run_dir);

struct BayesResult {
  Vector ensemble_mean;
  Matrix ensemble_covariance;
  Vector quadrature_mean;
  Matrix quadrature_covariance;
  std::optional<Vector> conjugate_mean;  ///< closed form for the Gaussian likelihood
  Eigen::Index n = 0;
};

/// Keys: likelihood (logistic | gaussian), data_file, prior_variance,
/// noise_variance, n, t_max, dt, init_std. Writes bayes.jsonl.
BayesResult run_bayes_demo(const Config& config, const std::string& out_dir);

}  // namespace steinlab
