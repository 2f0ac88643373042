#include "steinlab/config.hpp"
#include "steinlab/experiments.hpp"
#include "steinlab/parallel.hpp"
#include "steinlab/persistence.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace steinlab;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
  const fs::path p = fs::path(testing::TempDir()) / ("steinlab_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

Config small_sweep() {
  return Config::parse("n_list = 50, 100, 200\nreplicates = 3\nt_max = 1\nseed = 7\n");
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(STEINLAB_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, ParsesCommentsQuotesAndTypes) {
  const Config c = Config::parse("# comment\npotential = \"quadratic\"\nbandwidth = 0.5  # inline\nn_list = 1,2, 3\nflag = true\n");
  EXPECT_EQ(c.get_string("potential", ""), "quadratic");
  EXPECT_EQ(c.get_double("bandwidth", 1.0), 0.5);
  EXPECT_EQ(c.get_list("n_list", {}), (std::vector<double>{1, 2, 3}));
  EXPECT_TRUE(c.get_bool("flag", false));
  EXPECT_EQ(kernel_from_config(c)->bandwidth(), 0.5);
}

TEST(Config, Errors) {
  EXPECT_THROW(Config::parse("a = 1\na = 2\n"), ConfigError);
  EXPECT_THROW(Config::parse("no equals sign\n"), ConfigError);
  EXPECT_THROW(Config::parse("n = abc\n").get_int("n", 0), ConfigError);
  EXPECT_THROW(Config::load("/nonexistent/file.cfg"), ConfigError);
}

TEST(Config, HashIgnoresOutputAndThreadsOnly) {
  const Config a = Config::parse("seed = 1\nout = x\nthreads = 4\n");
  const Config b = Config::parse("threads = 1\nseed = 1\nout = y\n");
  const Config c = Config::parse("seed = 2\n");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
  EXPECT_EQ(a.hash().size(), 16u);
}

TEST(Persistence, TrajectoryRoundTrip) {
  TrajectoryRecord r;
  r.times = {0.0, 0.1};
  PointCloud p(2, 3);
  p << 0.1, -2.5, 1e-17, 3, 4, 5.25;
  r.snapshots = {ParticleEnsemble(p), ParticleEnsemble(p * 0.5)};
  const auto back = parse_trajectory_csv(trajectory_csv(r));
  ASSERT_EQ(back.snapshots.size(), 2u);
  EXPECT_EQ(back.times, r.times);
  EXPECT_EQ(back.snapshots[1].positions(), r.snapshots[1].positions());
}

TEST(Persistence, NumbersRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02e23}) EXPECT_EQ(std::stod(format_number(v)), v);
}

TEST(StabilitySweep, RecordsAndScaling) {
  const auto r = run_stability_sweep(small_sweep(), "");
  ASSERT_EQ(r.runs.size(), 9u);
  ASSERT_EQ(r.mean_m0.size(), 3u);
  // Reported, not asserted per run: the average initial distance shrinks with N.
  EXPECT_GT(r.mean_m0[0].second, r.mean_m0[2].second);
  for (const auto& run : r.runs) EXPECT_EQ(run.status, "ok");
}

TEST(StabilitySweep, ZeroHorizon) {
  Config c = small_sweep();
  c.set("t_max", "0");
  const auto r = run_stability_sweep(c, "");
  for (const auto& run : r.runs) {
    EXPECT_EQ(run.series.values.size(), 1u);
    EXPECT_FALSE(run.departure.has_value());
  }
}

TEST(StabilitySweep, ByteIdenticalAcrossRunsAndThreads) {
  const std::string a = scratch("sweep_a"), b = scratch("sweep_b");
  set_worker_count(1);
  run_stability_sweep(small_sweep(), a);
  set_worker_count(3);
  run_stability_sweep(small_sweep(), b);
  set_worker_count(1);
  for (const char* f : {"series.csv", "summary.csv", "sweep.jsonl"})
    EXPECT_EQ(read_file(a + "/" + f), read_file(b + "/" + f)) << f;
}

TEST(StabilitySweep, InvalidConfigRejected) {
  Config c = small_sweep();
  c.set("n_list", "");
  EXPECT_THROW(run_stability_sweep(c, ""), ConfigError);
  c = small_sweep();
  c.set("dt", "-1");
  EXPECT_THROW(run_stability_sweep(c, ""), ConfigError);
}

TEST(ConvergenceSweep, ExplicitSchedule) {
  const Config c = Config::parse("schedule = 0.5:64, 1.0:256, 1.5:1024\nreplicates = 8\nseed = 3\n");
  const auto r = run_convergence_sweep(c, "");
  ASSERT_EQ(r.pairs.size(), 3u);
  for (const auto& p : r.pairs) EXPECT_EQ(p.distances.size(), 8u);
  // Monte-Carlo scatter is large at N = 64; the longest run is clearly closest.
  EXPECT_LT(r.pairs[2].median, r.pairs[0].median);
}

TEST(ConvergenceSweep, BaselineAtTimeZero) {
  const Config c = Config::parse("schedule = 0:2000\nreplicates = 4\nseed = 3\n");
  const auto r = run_convergence_sweep(c, "");
  // Start density N(2, 0.5^2) against N(0, 1): the quantile coupling gives
  // E|2 - Z/2| = 2 up to a 1e-5 tail term, plus the sampling error of 2000 points.
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_NEAR(r.pairs[0].median, 2.0, 0.05);
}

TEST(ConvergenceSweep, EmptyScheduleAfterSaturation) {
  const Config c = Config::parse("calibration = 50\nschedule_points = 3\nreplicates = 2\n");
  const auto r = run_convergence_sweep(c, "");
  EXPECT_TRUE(r.pairs.empty());
  EXPECT_FALSE(r.notes.empty());
  EXPECT_NE(r.notes.back().find("empty schedule"), std::string::npos);
}

TEST(Simulate, AuditRoundTrip) {
  const std::string dir = scratch("audit");
  const Config c = Config::parse("n = 40\nt_max = 0.5\nseed = 2\n");
  const auto r = run_simulate(c, dir);
  EXPECT_EQ(r.series.values.size(), 6u);
  const auto audit = run_audit(c, dir);
  EXPECT_TRUE(audit.pass);
  EXPECT_EQ(audit.checked, 6u);
  const auto meta = parse_jsonl(read_file(dir + "/trajectory.jsonl"));
  EXPECT_EQ(meta.at(0).at("config_hash"), c.hash());
  EXPECT_EQ(meta.at(0).at("N"), 40);
}

TEST(Bayes, ConjugateGaussianOneDimension) {
  const Config c = Config::parse(std::string("likelihood = gaussian\ndata_file = ") + STEINLAB_TEST_DATA +
                                 "/gaussian_1d.csv\nnoise_variance = 0.25\nn = 200\nt_max = 10\nseed = 1\n");
  const auto r = run_bayes_demo(c, "");
  ASSERT_TRUE(r.conjugate_mean.has_value());
  EXPECT_NEAR(r.ensemble_mean[0], (*r.conjugate_mean)[0], 3.0 / std::sqrt(200.0));
  EXPECT_NEAR(r.quadrature_mean[0], (*r.conjugate_mean)[0], 1e-6);
}

TEST(Bayes, EmptyDataGivesPrior) {
  const Config c = Config::parse(std::string("likelihood = logistic\ndim = 1\ndata_file = ") + STEINLAB_TEST_DATA +
                                 "/empty.csv\nn = 100\nt_max = 5\nseed = 4\n");
  const auto r = run_bayes_demo(c, "");
  EXPECT_NEAR(r.quadrature_mean[0], 0.0, 1e-10);
  EXPECT_NEAR(r.quadrature_covariance(0, 0), 1.0, 1e-6);
  EXPECT_NEAR(r.ensemble_mean[0], 0.0, 0.05);
}

TEST(Bayes, LogisticTwoDimensions) {
  const Config c = Config::parse(std::string("likelihood = logistic\ndata_file = ") + STEINLAB_TEST_DATA +
                                 "/logistic_toy.csv\nn = 500\nt_max = 10\ndt = 0.05\nseed = 1\n");
  const auto r = run_bayes_demo(c, "");
  EXPECT_LT((r.ensemble_mean - r.quadrature_mean).cwiseAbs().maxCoeff(), 0.1);
}

TEST(Bayes, MalformedDataFile) {
  const std::string dir = scratch("bayes_bad");
  {
    std::ofstream f(dir + "/bad.csv");
    f << "1, 2\n0, x\n";
  }
  const Config c = Config::parse("data_file = " + dir + "/bad.csv\n");
  EXPECT_THROW(run_bayes_demo(c, ""), ConfigError);
}

TEST(Cli, ExitCodes) {
  const std::string dir = scratch("cli");
  {
    std::ofstream(dir + "/ok.cfg") << "n = 20\nt_max = 0.2\n";
    std::ofstream(dir + "/bad.cfg") << "potential = cubic\n";
    std::ofstream(dir + "/blowup.cfg") << "potential = quartic\nn = 1\ninit = gaussian\ninit_mean = 3\ninit_std = 0.01\n"
                                          "integrator = euler\ndt = 0.5\nt_max = 10\n";
  }
  EXPECT_EQ(run_cli("simulate --config " + dir + "/ok.cfg --out " + dir + "/ok --seed 5 --threads 2"), 0);
  EXPECT_TRUE(fs::exists(dir + "/ok/trajectory.csv"));
  EXPECT_EQ(run_cli("simulate --config " + dir + "/bad.cfg --out " + dir + "/bad"), 2);
  EXPECT_EQ(run_cli("simulate --config " + dir + "/blowup.cfg --out " + dir + "/blowup"), 3);
  EXPECT_EQ(run_cli("simulate"), 2);
  EXPECT_EQ(run_cli("audit --config " + dir + "/ok.cfg --run " + dir + "/ok"), 0);
}
