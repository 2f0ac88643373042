#include "steinlab/experiments.hpp"

#include "steinlab/persistence.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace steinlab {

using nlohmann::json;

namespace {

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

// Wall-clock times go to a separate log so that result files stay byte-identical.
void log_timing(const std::string& out_dir, const std::string& what, double seconds) {
  if (out_dir.empty()) return;
  std::filesystem::create_directories(out_dir);
  std::ofstream log(join(out_dir, "timing.log"), std::ios::app);
  log << what << " " << seconds << " s\n";
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int snapshot_stride(const Config& config, double dt) {
  const double interval = config.get_double("snapshot_interval", 0.1);
  if (interval <= 0.0) throw ConfigError("snapshot_interval must be positive");
  return std::max(1, static_cast<int>(std::lround(interval / dt)));
}

double positive(const Config& config, const std::string& key, double fallback) {
  const double v = config.get_double(key, fallback);
  if (!(v > 0.0)) throw ConfigError("key '" + key + "' must be positive");
  return v;
}

double nonnegative(const Config& config, const std::string& key, double fallback) {
  const double v = config.get_double(key, fallback);
  if (!(v >= 0.0)) throw ConfigError("key '" + key + "' must be nonnegative");
  return v;
}

json model_ids(const Config& config) {
  return json{{"potential", config.get_string("potential", "quadratic")},
              {"kernel", config.get_string("kernel", "gaussian")},
              {"bandwidth", kernel_from_config(config)->bandwidth()}};
}

double wasserstein_to_reference(double q, const ParticleEnsemble& ensemble, const Reference& reference, Philox& rng) {
  if (ensemble.dim() == 1) return wasserstein_1d(q, SignedDiscreteMeasure::from_ensemble(ensemble), reference.measure);
  // In d >= 2 the reference is replaced by an equally sized i.i.d. sample.
  const ParticleEnsemble sample = sample_target(reference.target, ensemble.size(), rng);
  return wasserstein_assignment(q, ensemble, sample);
}

std::string departure_text(const std::optional<double>& t) { return t ? format_number(*t) : "none"; }

}  // namespace

Box box_from_config(const Config& config, const Potential& potential, Eigen::Index dim) {
  if (config.has("box")) {
    const double half = positive(config, "box", 12.0);
    return Box::cube(dim, -half, half);
  }
  const Box automatic = truncation_box(potential, dim, 1e-12);
  const double half = std::max(12.0, automatic.upper[0]);
  return Box::cube(dim, -half, half);
}

Reference make_reference(const Config& config, const PotentialPtr& potential, Eigen::Index dim) {
  const Box box = box_from_config(config, *potential, dim);
  if (dim > 2) {
    // No grid quadrature; the target still needs a normalisation-free sampler.
    throw ConfigError("reference measures are available for dim <= 2 only");
  }
  TargetDensity target(potential, box, dim == 1 ? 256 : 128);
  const auto atoms = config.get_int("reference_atoms", dim == 1 ? 2001 : 101);
  if (atoms < 2) throw ConfigError("reference_atoms must be at least 2");
  SignedDiscreteMeasure measure = quadrature_measure(target, atoms);
  double error = 0.0;
  if (dim == 1) {
    const SignedDiscreteMeasure finer = quadrature_measure(target, 2 * atoms - 1);
    error = bl_weighted_norm(subtract(measure, finer), potential.get()).value;
  }
  return Reference{std::move(target), std::move(measure), error};
}

LPResult distance_to_reference(const ParticleEnsemble& ensemble, const Reference& reference) {
  return bl_weighted_norm(subtract(ensemble, reference.measure), &reference.target.potential());
}

ParticleEnsemble initial_ensemble(const Config& config, const Reference& reference, Eigen::Index n, Philox& rng) {
  const std::string init = config.get_string("init", "target");
  if (init == "target") return sample_target(reference.target, n, rng);
  if (init == "gaussian") {
    const Eigen::Index d = reference.target.domain().dim();
    return sample_gaussian(n, Vector::Constant(d, config.get_double("init_mean", 0.0)),
                           positive(config, "init_std", 1.0), rng);
  }
  throw ConfigError("unknown init '" + init + "' (expected target or gaussian)");
}

// --- simulate ------------------------------------------------------------------

SimulateResult run_simulate(const Config& config, const std::string& out_dir) {
  Stopwatch clock;
  const auto potential = potential_from_config(config);
  const auto kernel = kernel_from_config(config);
  const auto dim = static_cast<Eigen::Index>(config.get_int("dim", 1));
  const auto n = static_cast<Eigen::Index>(config.get_int("n", 100));
  if (n < 1 || dim < 1) throw ConfigError("n and dim must be positive");
  const std::uint64_t seed = config.get_u64("seed", 0);
  const double dt = positive(config, "dt", 0.01);
  const double t_max = nonnegative(config, "t_max", 1.0);
  const Integrator method = parse_integrator(config.get_string("integrator", "rk4"));
  const Reference reference = make_reference(config, potential, dim);

  Philox rng(Philox::stream_key(seed, static_cast<std::uint64_t>(n), 0));
  const ParticleEnsemble start = initial_ensemble(config, reference, n, rng);

  SimulateResult result;
  try {
    result.record = integrate(start, *potential, *kernel, 0.0, t_max, dt, method, snapshot_stride(config, dt));
  } catch (const TrajectoryBlowUp& e) {
    result.record = e.partial();
    result.status = e.what();
  }
  result.series.particles = n;
  std::ostringstream series_csv;
  series_csv << "t,bl_weighted_distance\n";
  for (std::size_t k = 0; k < result.record.snapshots.size(); ++k) {
    const double v = distance_to_reference(result.record.snapshots[k], reference).value;
    result.series.times.push_back(result.record.times[k]);
    result.series.values.push_back(v);
    series_csv << format_number(result.record.times[k]) << ',' << format_number(v) << '\n';
  }

  if (!out_dir.empty()) {
    write_file_atomic(join(out_dir, "trajectory.csv"), trajectory_csv(result.record));
    write_file_atomic(join(out_dir, "series.csv"), series_csv.str());
    json meta{{"N", n},
              {"d", dim},
              {"dt", dt},
              {"method", to_string(method)},
              {"seed", seed},
              {"models", model_ids(config)},
              {"status", result.status},
              {"reference_atoms", reference.measure.size()},
              {"reference_discretization_error", reference.discretization_error},
              {"config_hash", config.hash()},
              {"code_version", kCodeVersion}};
    write_file_atomic(join(out_dir, "trajectory.jsonl"), jsonl({meta}));
    log_timing(out_dir, "simulate", clock.seconds());
  }
  if (result.status != "ok") throw TrajectoryBlowUp(result.record);
  return result;
}

// --- stability sweep -------------------------------------------------------------

StabilitySweepResult run_stability_sweep(const Config& config, const std::string& out_dir) {
  Stopwatch clock;
  const auto potential = potential_from_config(config);
  const auto kernel = kernel_from_config(config);
  const auto dim = static_cast<Eigen::Index>(config.get_int("dim", 1));
  const std::vector<double> n_list = config.get_list("n_list", {50, 100, 200, 400});
  if (n_list.empty()) throw ConfigError("n_list must be nonempty");
  for (double v : n_list)
    if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("n_list entries must be positive integers");
  const auto replicates = static_cast<int>(config.get_int("replicates", 8));
  if (replicates < 1) throw ConfigError("replicates must be positive");
  const std::uint64_t seed = config.get_u64("seed", 0);
  const double dt = positive(config, "dt", 0.01);
  const double t_max = nonnegative(config, "t_max", 20.0);
  const double factor = config.get_double("departure_factor", 2.0);
  if (!(factor > 1.0)) throw ConfigError("departure_factor must exceed 1");
  const Integrator method = parse_integrator(config.get_string("integrator", "rk4"));
  const int stride = snapshot_stride(config, dt);
  const Reference reference = make_reference(config, potential, dim);

  StabilitySweepResult result;
  result.config_hash = config.hash();
  result.pilot_n = static_cast<Eigen::Index>(config.get_int("pilot_n", static_cast<long long>(*std::min_element(n_list.begin(), n_list.end()))));

  for (double nv : n_list) {
    const auto n = static_cast<Eigen::Index>(nv);
    for (int rep = 0; rep < replicates; ++rep) {
      StabilityRun run;
      run.n = n;
      run.replicate = rep;
      run.series.particles = n;
      run.series.metadata = {{"seed", std::to_string(seed)}, {"replicate", std::to_string(rep)},
                             {"potential", potential->id()}, {"kernel", kernel->id()}};
      Philox rng(Philox::stream_key(seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep)));
      const ParticleEnsemble start = initial_ensemble(config, reference, n, rng);
      TrajectoryRecord record;
      try {
        record = integrate(start, *potential, *kernel, 0.0, t_max, dt, method, stride);
      } catch (const TrajectoryBlowUp& e) {
        record = e.partial();
        run.status = e.what();
      } catch (const NumericError& e) {
        run.status = e.what();
      }
      for (std::size_t k = 0; k < record.snapshots.size(); ++k) {
        run.series.times.push_back(record.times[k]);
        run.series.values.push_back(distance_to_reference(record.snapshots[k], reference).value);
      }
      if (!run.series.values.empty()) {
        run.m0 = run.series.values.front();
        if (run.m0 > 0.0) run.departure = fit_departure_time(run.series, factor);
      }
      result.runs.push_back(std::move(run));
    }
  }

  // Calibrate C on the pilot N, then test on the others.
  std::vector<NormSeries> pilot;
  for (const auto& run : result.runs)
    if (run.n == result.pilot_n && run.status == "ok" && run.m0 > 0.0) pilot.push_back(run.series);
  const std::string calibration = config.get_string("calibration", "fit");
  if (calibration == "fit") {
    if (!pilot.empty()) result.constant = calibrate_stability_constant(pilot);
  } else {
    result.constant = positive(config, "calibration", 1.0);
  }
  std::size_t tested = 0, passed = 0;
  for (auto& run : result.runs) {
    if (run.n == result.pilot_n || run.status != "ok" || !result.constant || run.m0 <= 0.0) continue;
    const StabilityVerdict v = stability_certificate(run.series, *result.constant);
    run.certificate = v.pass;
    run.certificate_checked = v.checked;
    ++tested;
    if (v.pass) ++passed;
  }
  result.certificate_pass_fraction = tested > 0 ? static_cast<double>(passed) / static_cast<double>(tested) : 0.0;

  std::vector<Eigen::Index> ns;
  for (double nv : n_list) ns.push_back(static_cast<Eigen::Index>(nv));
  for (Eigen::Index n : ns) {
    std::vector<double> deps, m0s;
    for (const auto& run : result.runs)
      if (run.n == n) {
        deps.push_back(run.departure.value_or(std::numeric_limits<double>::infinity()));
        m0s.push_back(run.m0);
      }
    result.median_departure.emplace_back(n, median(deps));
    double mean = 0.0;
    for (double m : m0s) mean += m / static_cast<double>(m0s.size());
    result.mean_m0.emplace_back(n, mean);
  }

  if (!out_dir.empty()) {
    std::ostringstream series_csv, summary_csv;
    series_csv << "N,replicate,t,bl_weighted_distance\n";
    summary_csv << "N,replicate,m0,departure_time,certificate,status\n";
    std::vector<json> records;
    for (const auto& run : result.runs) {
      for (std::size_t k = 0; k < run.series.times.size(); ++k)
        series_csv << run.n << ',' << run.replicate << ',' << format_number(run.series.times[k]) << ','
                   << format_number(run.series.values[k]) << '\n';
      const std::string cert = run.certificate ? (*run.certificate ? "pass" : "fail") : "n/a";
      summary_csv << run.n << ',' << run.replicate << ',' << format_number(run.m0) << ','
                  << departure_text(run.departure) << ',' << cert << ',' << run.status << '\n';
      records.push_back(json{{"record", "run"},
                             {"config_hash", result.config_hash},
                             {"code_version", kCodeVersion},
                             {"seed", seed},
                             {"N", run.n},
                             {"replicate", run.replicate},
                             {"models", model_ids(config)},
                             {"dt", dt},
                             {"method", to_string(method)},
                             {"m0", run.m0},
                             {"departure_time", departure_text(run.departure)},
                             {"certificate", cert},
                             {"certificate_checked", run.certificate_checked},
                             {"solver_status", "optimal"},
                             {"status", run.status},
                             {"values", run.series.values}});
    }
    json summary{{"record", "summary"},
                 {"config_hash", result.config_hash},
                 {"pilot_N", result.pilot_n},
                 {"calibrated_C", result.constant ? json(*result.constant) : json("none")},
                 {"certificate_pass_fraction", result.certificate_pass_fraction},
                 {"reference_discretization_error", reference.discretization_error}};
    const auto [lo, hi] = std::minmax_element(n_list.begin(), n_list.end());
    if (n_list.size() < 3 || *hi < 8.0 * *lo)
      summary["warning"] = "N list has fewer than 3 values or spans less than 8x; departure scaling is weakly constrained";
    json medians = json::array();
    for (const auto& [n, m] : result.median_departure)
      medians.push_back(json{{"N", n}, {"median_departure", std::isinf(m) ? json("none") : json(m)}});
    summary["median_departure"] = medians;
    records.push_back(summary);
    write_file_atomic(join(out_dir, "series.csv"), series_csv.str());
    write_file_atomic(join(out_dir, "summary.csv"), summary_csv.str());
    write_file_atomic(join(out_dir, "sweep.jsonl"), jsonl(records));
    log_timing(out_dir, "stability-sweep", clock.seconds());
  }
  return result;
}

// --- convergence sweep ------------------------------------------------------------

ConvergenceSweepResult run_convergence_sweep(const Config& config, const std::string& out_dir) {
  Stopwatch clock;
  const auto potential = potential_from_config(config);
  const auto kernel = kernel_from_config(config);
  const auto dim = static_cast<Eigen::Index>(config.get_int("dim", 1));
  const std::uint64_t seed = config.get_u64("seed", 0);
  const double dt = positive(config, "dt", 0.01);
  const double q = config.get_double("q", 1.0);
  if (!(q >= 1.0)) throw ConfigError("q must be >= 1");
  const auto replicates = static_cast<int>(config.get_int("replicates", 8));
  if (replicates < 1) throw ConfigError("replicates must be positive");
  const Integrator method = parse_integrator(config.get_string("integrator", "rk4"));
  Config start_config = config;
  if (!start_config.has("init")) start_config.set("init", "gaussian");
  if (!start_config.has("init_mean")) start_config.set("init_mean", "2");
  if (!start_config.has("init_std")) start_config.set("init_std", "0.5");
  const Reference reference = make_reference(config, potential, dim);

  ConvergenceSweepResult result;
  result.config_hash = config.hash();
  std::vector<std::pair<double, std::uint64_t>> schedule;
  const std::string schedule_text = config.get_string("schedule", "auto");
  if (schedule_text == "auto") {
    const std::string calibration = config.get_string("calibration", "fit");
    if (calibration == "fit") {
      const auto pilot_n = static_cast<Eigen::Index>(config.get_int("pilot_n", 64));
      const double pilot_t = positive(config, "pilot_t", 1.0);
      Philox ra(Philox::stream_key(seed, static_cast<std::uint64_t>(pilot_n), 1000));
      Philox rb(Philox::stream_key(seed, static_cast<std::uint64_t>(pilot_n), 1001));
      const ParticleEnsemble a0 = initial_ensemble(start_config, reference, pilot_n, ra);
      const ParticleEnsemble b0 = initial_ensemble(start_config, reference, pilot_n, rb);
      const auto a1 = integrate(a0, *potential, *kernel, 0.0, pilot_t, dt, method, 1 << 30).snapshots.back();
      const auto b1 = integrate(b0, *potential, *kernel, 0.0, pilot_t, dt, method, 1 << 30).snapshots.back();
      auto w = [&](const ParticleEnsemble& x, const ParticleEnsemble& y) {
        return dim == 1 ? wasserstein_1d(q, x, y) : wasserstein_assignment(q, x, y);
      };
      result.pilot_amplification = w(a1, b1) / w(a0, b0);
      result.constant = calibrate_schedule_constant(result.pilot_amplification, pilot_t);
    } else {
      result.constant = positive(config, "calibration", 1.0);
    }
    const double step = positive(config, "schedule_step", 0.5);
    const auto points = config.get_int("schedule_points", 12);
    const auto cap = static_cast<std::uint64_t>(config.get_int("schedule_cap", 1024));
    for (long long k = 0; k < points; ++k) {
      const double t = static_cast<double>(k) * step;
      const ScheduleValue v = double_exp_schedule(result.constant, t);
      if (v.overflow) {
        result.notes.push_back("t=" + format_number(t) + ": schedule saturated, skipped");
      } else if (v.n > cap) {
        result.notes.push_back("t=" + format_number(t) + ": N=" + std::to_string(v.n) + " above cap " +
                               std::to_string(cap) + ", skipped");
      } else {
        schedule.emplace_back(t, v.n);
      }
    }
  } else {
    std::stringstream ss(schedule_text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw ConfigError("schedule entries must look like t:N");
      try {
        schedule.emplace_back(std::stod(item.substr(0, colon)), std::stoull(item.substr(colon + 1)));
      } catch (const std::exception&) {
        throw ConfigError("bad schedule entry '" + item + "'");
      }
    }
  }
  if (schedule.empty()) result.notes.push_back("empty schedule: every pair was saturated or capped");

  for (const auto& [t, n] : schedule) {
    if (n < 1 || t < 0.0) throw ConfigError("schedule pairs need t >= 0 and N >= 1");
    ConvergencePair pair{t, n, {}, 0.0};
    for (int rep = 0; rep < replicates; ++rep) {
      Philox rng(Philox::stream_key(seed, n, static_cast<std::uint64_t>(rep)));
      const ParticleEnsemble start = initial_ensemble(start_config, reference, static_cast<Eigen::Index>(n), rng);
      const ParticleEnsemble end =
          t > 0.0 ? integrate(start, *potential, *kernel, 0.0, t, dt, method, 1 << 30).snapshots.back() : start;
      pair.distances.push_back(wasserstein_to_reference(q, end, reference, rng));
    }
    pair.median = median(pair.distances);
    result.pairs.push_back(std::move(pair));
  }
  result.strictly_decreasing = result.pairs.size() >= 2;
  for (std::size_t k = 1; k < result.pairs.size(); ++k)
    if (!(result.pairs[k].median < result.pairs[k - 1].median)) result.strictly_decreasing = false;

  if (!out_dir.empty()) {
    std::ostringstream csv;
    csv << "t,N,replicate,w_q\n";
    std::vector<json> records;
    for (const auto& pair : result.pairs) {
      for (std::size_t r = 0; r < pair.distances.size(); ++r)
        csv << format_number(pair.t) << ',' << pair.n << ',' << r << ',' << format_number(pair.distances[r]) << '\n';
      records.push_back(json{{"record", "pair"},
                             {"config_hash", result.config_hash},
                             {"code_version", kCodeVersion},
                             {"seed", seed},
                             {"models", model_ids(config)},
                             {"q", q},
                             {"t", pair.t},
                             {"N", pair.n},
                             {"median", pair.median},
                             {"values", pair.distances}});
    }
    records.push_back(json{{"record", "summary"},
                           {"config_hash", result.config_hash},
                           {"C", result.constant},
                           {"pilot_amplification", result.pilot_amplification},
                           {"strictly_decreasing", result.strictly_decreasing},
                           {"notes", result.notes}});
    write_file_atomic(join(out_dir, "convergence.csv"), csv.str());
    write_file_atomic(join(out_dir, "convergence.jsonl"), jsonl(records));
    log_timing(out_dir, "convergence-sweep", clock.seconds());
  }
  return result;
}

// --- pde1d -----------------------------------------------------------------------

PdeRun run_pde_experiment(const Config& config, const std::string& out_dir) {
  Stopwatch clock;
  const auto potential = potential_from_config(config);
  const auto kernel = kernel_from_config(config);
  const double left = config.get_double("left", -12.0), right = config.get_double("right", 12.0);
  const auto cells = static_cast<Eigen::Index>(config.get_int("cells", 512));
  if (!(right > left) || cells < 2) throw ConfigError("pde grid needs right > left and cells >= 2");
  const UniformGrid1D grid(left, right, cells);
  const double mean = config.get_double("init_mean", 1.0);
  const double sd = positive(config, "init_std", 1.0);
  const GridDensity1D rho0 = GridDensity1D::from_function(grid, [&](double x) {
    const double z = (x - mean) / sd;
    return std::exp(-0.5 * z * z);
  });
  const TargetDensity target(potential, Box{Vector::Constant(1, left), Vector::Constant(1, right)});
  const GridDensity1D rho_inf = target_on_grid(target, grid);
  PdeOptions options;
  options.scheme = parse_flux_scheme(config.get_string("scheme", "muscl"));
  double dt = nonnegative(config, "pde_dt", 0.0);
  if (dt == 0.0) {
    const double umax = face_velocity(rho0, *potential, *kernel).cwiseAbs().maxCoeff();
    dt = 0.5 * grid.spacing() / std::max(1.0, umax);
  }
  const double t_max = nonnegative(config, "t_max", 5.0);
  const auto stride = static_cast<int>(config.get_int("stride", 100));
  PdeRun run = run_pde(rho0, rho_inf, *potential, *kernel, dt, t_max, options, stride);

  if (!out_dir.empty()) {
    std::ostringstream dens, diag;
    dens << "# left=" << format_number(left) << ",right=" << format_number(right) << ",n_cells=" << cells
         << ",dt=" << format_number(dt) << ",scheme=" << to_string(options.scheme) << '\n';
    dens << "t,cell,value\n";
    for (std::size_t s = 0; s < run.snapshots.size(); ++s)
      for (Eigen::Index i = 0; i < cells; ++i)
        dens << format_number(run.snapshot_times[s]) << ',' << i << ',' << format_number(run.snapshots[s].values()[i])
             << '\n';
    diag << "t,kl,dissipation,mass,second_moment\n";
    const auto& d = run.diagnostics;
    for (std::size_t k = 0; k < d.times.size(); ++k)
      diag << format_number(d.times[k]) << ',' << format_number(d.kl[k]) << ',' << format_number(d.dissipation[k])
           << ',' << format_number(d.mass[k]) << ',' << format_number(d.second_moment[k]) << '\n';
    json summary{{"config_hash", config.hash()},
                 {"code_version", kCodeVersion},
                 {"models", model_ids(config)},
                 {"dt", dt},
                 {"cells", cells},
                 {"scheme", to_string(options.scheme)},
                 {"kl_initial", d.kl.front()},
                 {"kl_final", d.kl.back()},
                 {"max_kl_increase", run.max_kl_increase},
                 {"max_mass_drift", run.max_mass_drift},
                 {"max_balance_error", run.max_balance_error},
                 {"mean_balance_error", run.mean_balance_error}};
    write_file_atomic(join(out_dir, "pde_density.csv"), dens.str());
    write_file_atomic(join(out_dir, "pde_diagnostics.csv"), diag.str());
    write_file_atomic(join(out_dir, "pde.jsonl"), jsonl({summary}));
    log_timing(out_dir, "pde1d", clock.seconds());
  }
  return run;
}

// --- check-assumptions -------------------------------------------------------------

std::vector<AssumptionReport> run_check_assumptions(const Config& config, const std::string& out_dir) {
  const auto potential = potential_from_config(config);
  const auto kernel = kernel_from_config(config);
  const auto dim = static_cast<Eigen::Index>(config.get_int("dim", 1));
  std::vector<double> radii;
  for (int k = 0; k <= 24; ++k) radii.push_back(std::pow(10.0, 2.0 * k / 24.0));
  std::vector<AssumptionReport> reports;
  const auto family = potential->family();
  if (family == PotentialFamily::logistic_posterior || family == PotentialFamily::gaussian_posterior) {
    AssumptionReport skipped;
    skipped.name = "growth";
    skipped.pass = true;
    skipped.probes = "not applicable: posterior potentials are treated as 'other' for growth checks";
    skipped.witnesses.push_back({"declared growth", Vector::Zero(1), potential->declared_growth()});
    reports.push_back(skipped);
  } else if (family != PotentialFamily::zero) {
    reports.push_back(check_growth(*potential, radii, dim));
  }
  B3ProbeGrid grid;
  grid.dim = dim;
  reports.push_back(check_condition_B3(*potential, *kernel, grid));
  reports.push_back(check_positive_definite(*kernel));

  if (!out_dir.empty()) {
    std::vector<json> records;
    for (const auto& r : reports) {
      json witnesses = json::array();
      for (const auto& w : r.witnesses)
        witnesses.push_back(json{{"label", w.label},
                                 {"point", std::vector<double>(w.point.data(), w.point.data() + w.point.size())},
                                 {"value", w.value}});
      records.push_back(json{{"check", r.name},
                             {"pass", r.pass},
                             {"probes", r.probes},
                             {"witnesses", witnesses},
                             {"models", model_ids(config)},
                             {"config_hash", config.hash()}});
    }
    write_file_atomic(join(out_dir, "assumptions.jsonl"), jsonl(records));
  }
  return reports;
}

// --- metric --------------------------------------------------------------------------

MetricResult run_metric(const Config& config, const std::string& out_dir) {
  const std::string metric = config.get_string("metric", "bl_weighted");
  auto load = [&](const std::string& key) {
    std::ifstream in(config.require_string(key));
    if (!in) throw ConfigError("cannot open measure file '" + config.require_string(key) + "'");
    return read_measure_csv(in);
  };
  const SignedDiscreteMeasure a = load("measure_a");
  const SignedDiscreteMeasure b = config.has("measure_b") ? load("measure_b") : SignedDiscreteMeasure(a.dim());
  Stopwatch clock;
  MetricResult result;
  result.metric = metric;
  if (metric == "bl_weighted" || metric == "bl_flat") {
    const auto potential = metric == "bl_weighted" ? potential_from_config(config) : nullptr;
    const SignedDiscreteMeasure mu = subtract(a, b);
    const LPResult lp = bl_weighted_norm(mu, potential.get());
    result.value = lp.value;
    result.atoms = mu.size();
    result.status = lp.status;
  } else if (metric == "wasserstein") {
    const double q = config.get_double("q", 1.0);
    if (a.dim() == 1) {
      result.value = wasserstein_1d(q, a, b);
    } else {
      if (a.size() != b.size()) throw ConfigError("unequal ensemble sizes");
      result.value = wasserstein_assignment(q, ParticleEnsemble(a.positions()), ParticleEnsemble(b.positions()));
    }
    result.atoms = a.size() + b.size();
  } else {
    throw ConfigError("unknown metric '" + metric + "'");
  }
  const double runtime_ms = 1e3 * clock.seconds();
  if (!out_dir.empty())
    write_file_atomic(join(out_dir, "metric.jsonl"), jsonl({json{{"metric", result.metric},
                                                                 {"value", result.value},
                                                                 {"n_atoms", result.atoms},
                                                                 {"solver_status", result.status},
                                                                 {"runtime_ms", runtime_ms}}}));
  return result;
}

// --- audit -----------------------------------------------------------------------------

AuditResult run_audit(const Config& config, const std::string& run_dir) {
  const TrajectoryRecord record = parse_trajectory_csv(read_file(join(run_dir, "trajectory.csv")));
  std::istringstream series(read_file(join(run_dir, "series.csv")));
  std::string line;
  std::getline(series, line);
  std::vector<double> stored;
  while (std::getline(series, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError("malformed series.csv row: " + line);
    stored.push_back(std::stod(line.substr(comma + 1)));
  }
  if (stored.size() != record.snapshots.size()) throw ConfigError("series.csv and trajectory.csv disagree in length");
  const auto potential = potential_from_config(config);
  const Reference reference = make_reference(config, potential, record.snapshots.front().dim());
  AuditResult result;
  for (std::size_t k = 0; k < stored.size(); ++k) {
    const double v = distance_to_reference(record.snapshots[k], reference).value;
    result.max_difference = std::max(result.max_difference, std::abs(v - stored[k]));
    ++result.checked;
  }
  result.pass = result.max_difference <= 1e-12;
  write_file_atomic(join(run_dir, "audit.jsonl"), jsonl({json{{"audit", result.pass ? "pass" : "fail"},
                                                             {"checked", result.checked},
                                                             {"max_difference", result.max_difference},
                                                             {"config_hash", config.hash()}}}));
  return result;
}

// --- Bayesian demo -------------------------------------------------------------------------

BayesResult run_bayes_demo(const Config& config, const std::string& out_dir) {
  const std::string likelihood = config.get_string("likelihood", "logistic");
  RegressionData data;
  if (config.has("data_file")) data = read_regression_data(config.require_string("data_file"));
  const auto dim = data.features.cols() > 0 ? data.features.cols() : static_cast<Eigen::Index>(config.get_int("dim", 1));
  if (data.features.cols() == 0) data.features.resize(0, dim);
  if (dim < 1 || dim > 2) throw ConfigError("the Bayesian demo supports 1-D or 2-D parameter spaces");
  const double prior_var = positive(config, "prior_variance", 1.0);
  const double noise_var = positive(config, "noise_variance", 1.0);
  PotentialPtr potential;
  if (likelihood == "logistic") potential = make_logistic_posterior(data, prior_var);
  else if (likelihood == "gaussian") potential = make_gaussian_posterior(data, noise_var, prior_var);
  else throw ConfigError("unknown likelihood '" + likelihood + "'");
  const auto kernel = kernel_from_config(config);

  BayesResult result;
  result.n = static_cast<Eigen::Index>(config.get_int("n", 200));
  const double dt = positive(config, "dt", 0.01);
  const double t_max = positive(config, "t_max", 10.0);
  Philox rng(Philox::stream_key(config.get_u64("seed", 0), static_cast<std::uint64_t>(result.n), 0));
  const ParticleEnsemble start = sample_gaussian(result.n, Vector::Zero(dim), positive(config, "init_std", 1.0), rng);
  const ParticleEnsemble end =
      integrate(start, *potential, *kernel, 0.0, t_max, dt, parse_integrator(config.get_string("integrator", "rk4")), 1 << 30)
          .snapshots.back();
  result.ensemble_mean = end.positions().rowwise().mean();
  const PointCloud centred = end.positions().colwise() - result.ensemble_mean;
  result.ensemble_covariance = centred * centred.transpose() / static_cast<double>(result.n);

  // Mode by Newton's method, then a grid spanning 8 Laplace standard deviations.
  Vector mode = Vector::Zero(dim);
  for (int it = 0; it < 100; ++it) {
    const Vector step = potential->hessian(mode).ldlt().solve(potential->gradient(mode));
    mode -= step;
    if (step.norm() < 1e-12) break;
  }
  const Matrix cov_laplace = potential->hessian(mode).inverse();
  const Eigen::Index nodes = dim == 1 ? 801 : 201;
  const double v_mode = potential->value(mode);
  Vector lo(dim), hi(dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    const double s = std::sqrt(cov_laplace(k, k));
    lo[k] = mode[k] - 8.0 * s;
    hi[k] = mode[k] + 8.0 * s;
  }
  double total = 0.0;
  Vector first = Vector::Zero(dim);
  Matrix second = Matrix::Zero(dim, dim);
  Vector x(dim);
  const Eigen::Index count = dim == 1 ? nodes : nodes * nodes;
  for (Eigen::Index idx = 0; idx < count; ++idx) {
    const Eigen::Index i = idx % nodes, j = idx / nodes;
    x[0] = lo[0] + (hi[0] - lo[0]) * static_cast<double>(i) / static_cast<double>(nodes - 1);
    if (dim == 2) x[1] = lo[1] + (hi[1] - lo[1]) * static_cast<double>(j) / static_cast<double>(nodes - 1);
    const double w = std::exp(-(potential->value(x) - v_mode));
    total += w;
    first += w * x;
    second += w * x * x.transpose();
  }
  result.quadrature_mean = first / total;
  result.quadrature_covariance = second / total - result.quadrature_mean * result.quadrature_mean.transpose();
  if (likelihood == "gaussian") {
    const Matrix precision = Matrix::Identity(dim, dim) / prior_var + data.features.transpose() * data.features / noise_var;
    result.conjugate_mean = precision.ldlt().solve(data.features.transpose() * data.labels / noise_var);
  }

  if (!out_dir.empty()) {
    auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    auto mat = [](const Matrix& m) {
      json rows = json::array();
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> r(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
        rows.push_back(r);
      }
      return rows;
    };
    json rec{{"config_hash", config.hash()},
             {"code_version", kCodeVersion},
             {"likelihood", likelihood},
             {"N", result.n},
             {"observations", data.labels.size()},
             {"ensemble_mean", vec(result.ensemble_mean)},
             {"ensemble_covariance", mat(result.ensemble_covariance)},
             {"quadrature_mean", vec(result.quadrature_mean)},
             {"quadrature_covariance", mat(result.quadrature_covariance)}};
    if (result.conjugate_mean) rec["conjugate_mean"] = vec(*result.conjugate_mean);
    write_file_atomic(join(out_dir, "bayes.jsonl"), jsonl({rec}));
  }
  return result;
}

}  // namespace steinlab
