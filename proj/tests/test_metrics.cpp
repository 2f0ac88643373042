#include "steinlab/lp.hpp"
#include "steinlab/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace steinlab;

namespace {

SignedDiscreteMeasure atoms(std::vector<double> xs, std::vector<double> ws) {
  PointCloud p(1, static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) p(0, static_cast<Eigen::Index>(i)) = xs[i];
  return SignedDiscreteMeasure(p, Eigen::Map<Vector>(ws.data(), static_cast<Eigen::Index>(ws.size())));
}

SignedDiscreteMeasure random_measure(Philox& rng, Eigen::Index n, Eigen::Index d, double spread = 3.0) {
  PointCloud p(d, n);
  Vector w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) p(k, i) = spread * (2.0 * rng.uniform() - 1.0);
    w[i] = 2.0 * rng.uniform() - 1.0;
  }
  return SignedDiscreteMeasure(p, w);
}

ParticleEnsemble random_ensemble(Philox& rng, Eigen::Index n, Eigen::Index d) {
  PointCloud p(d, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < d; ++k) p(k, i) = rng.normal();
  return ParticleEnsemble(p);
}

double permutation_bruteforce(double p, const ParticleEnsemble& a, const ParticleEnsemble& b) {
  std::vector<int> perm(static_cast<std::size_t>(a.size()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i)
      cost += std::pow((a.position(static_cast<Eigen::Index>(i)) - b.position(perm[i])).norm(), p);
    best = std::min(best, cost / static_cast<double>(perm.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow(best, 1.0 / p);
}

const PotentialPtr kQuadratic = make_quadratic_potential();

}  // namespace

TEST(Wasserstein1D, Examples) {
  const auto a = ParticleEnsemble::from_values({0.0, 2.0});
  EXPECT_EQ(wasserstein_1d(1.0, a, a), 0.0);
  for (double p : {1.0, 2.0, 3.5})
    EXPECT_DOUBLE_EQ(wasserstein_1d(p, ParticleEnsemble::from_values({0.0}), ParticleEnsemble::from_values({3.0})), 3.0);
  EXPECT_DOUBLE_EQ(wasserstein_1d(1.0, a, ParticleEnsemble::from_values({1.0, 3.0})), 1.0);
  EXPECT_THROW(wasserstein_1d(1.0, a, ParticleEnsemble::from_values({1.0})), PreconditionError);
}

TEST(Wasserstein1D, WeightedQuantileWalkMatchesEnsembles) {
  Philox rng(Philox::stream_key(4));
  const auto a = random_ensemble(rng, 40, 1), b = random_ensemble(rng, 40, 1);
  EXPECT_NEAR(wasserstein_1d(1.0, SignedDiscreteMeasure::from_ensemble(a), SignedDiscreteMeasure::from_ensemble(b)),
              wasserstein_1d(1.0, a, b), 1e-12);
  // Unequal supports: {0, 1} with weights (1/2, 1/2) against one atom at 1/2.
  EXPECT_DOUBLE_EQ(wasserstein_1d(1.0, atoms({0.0, 1.0}, {0.5, 0.5}), atoms({0.5}, {1.0})), 0.5);
}

TEST(WassersteinAssignment, MatchesPermutationBruteForce) {
  Philox rng(Philox::stream_key(5));
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_ensemble(rng, 3, 2), b = random_ensemble(rng, 3, 2);
    EXPECT_NEAR(wasserstein_assignment(1.0, a, b), permutation_bruteforce(1.0, a, b), 1e-10);
  }
}

TEST(WassersteinAssignment, MatchesSortedCouplingInOneDimension) {
  Philox rng(Philox::stream_key(6));
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + rng.next_u32() % 64);
    const auto a = random_ensemble(rng, n, 1), b = random_ensemble(rng, n, 1);
    EXPECT_NEAR(wasserstein_assignment(1.0, a, b), wasserstein_1d(1.0, a, b), 1e-10);
    EXPECT_NEAR(wasserstein_assignment(2.0, a, b), wasserstein_1d(2.0, a, b), 1e-10);
  }
}

TEST(WassersteinAssignment, SymmetryIdentityAndMonotoneInP) {
  Philox rng(Philox::stream_key(7));
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_ensemble(rng, 12, 3), b = random_ensemble(rng, 12, 3);
    EXPECT_EQ(wasserstein_assignment(1.0, a, a), 0.0);
    EXPECT_NEAR(wasserstein_assignment(1.0, a, b), wasserstein_assignment(1.0, b, a), 1e-12);
    EXPECT_LE(wasserstein_assignment(1.0, a, b), wasserstein_assignment(2.0, a, b) + 1e-12);
  }
}

TEST(Assignment, HungarianSmallCase) {
  Matrix c(3, 3);
  c << 4, 1, 3, 2, 0, 5, 3, 2, 2;
  const auto match = solve_assignment(c);
  double cost = 0.0;
  for (Eigen::Index i = 0; i < 3; ++i) cost += c(i, match[static_cast<std::size_t>(i)]);
  EXPECT_EQ(cost, 5.0);
}

TEST(Simplex, TextbookProblem) {
  // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6).
  Matrix a(3, 2);
  a << 1, 0, 0, 2, 3, 2;
  Vector b(3), c(2);
  b << 4, 12, 18;
  c << 3, 5;
  const auto r = simplex_maximize(a, b, c);
  EXPECT_TRUE(r.optimal);
  EXPECT_NEAR(r.value, 36.0, 1e-12);
  EXPECT_NEAR(r.x[0], 2.0, 1e-12);
  EXPECT_NEAR(r.x[1], 6.0, 1e-12);
}

TEST(Simplex, UnboundedThrows) {
  Matrix a(1, 2);
  a << 1, -1;
  EXPECT_THROW(simplex_maximize(a, Vector::Ones(1), Vector::Ones(2)), NumericError);
}

TEST(BLNorm, Examples) {
  const auto r = bl_weighted_norm(SignedDiscreteMeasure::dirac(Vector::Constant(1, 2.0)), kQuadratic.get());
  EXPECT_DOUBLE_EQ(r.value, 3.0);
  EXPECT_DOUBLE_EQ(r.phi[0], 1.0);
  EXPECT_DOUBLE_EQ(bl_weighted_norm(atoms({0.0, 1.0}, {1.0, -1.0})).value, 1.0);
  EXPECT_DOUBLE_EQ(bl_weighted_norm(atoms({0.0, 5.0}, {1.0, -1.0})).value, 2.0);
}

TEST(BLNorm, ChainAndSimplexAgree) {
  Philox rng(Philox::stream_key(8));
  for (int trial = 0; trial < 30; ++trial) {
    const auto mu = random_measure(rng, 12, 1);
    const auto chain = bl_weighted_norm(mu, kQuadratic.get(), BLSolver::chain);
    const auto simplex = bl_weighted_norm(mu, kQuadratic.get(), BLSolver::simplex);
    EXPECT_EQ(simplex.status, "optimal");
    EXPECT_NEAR(chain.value, simplex.value, 1e-9 * std::max(1.0, chain.value));
    EXPECT_TRUE(bl_feasible(mu, chain.phi));
    EXPECT_TRUE(bl_feasible(mu, simplex.phi));
  }
}

TEST(BLNorm, NormAxioms) {
  Philox rng(Philox::stream_key(9));
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index d = trial % 2 == 0 ? 1 : 2;
    const auto a = random_measure(rng, 5, d), b = random_measure(rng, 5, d);
    const double na = bl_weighted_norm(a, kQuadratic.get()).value;
    const double nb = bl_weighted_norm(b, kQuadratic.get()).value;
    const double nab = bl_weighted_norm(add(a, b), kQuadratic.get()).value;
    EXPECT_GE(na, 0.0);
    EXPECT_LE(nab, na + nb + 1e-8);
    EXPECT_NEAR(bl_weighted_norm(a.scaled(-2.5), kQuadratic.get()).value, 2.5 * na, 1e-9 * std::max(1.0, na));
  }
  EXPECT_EQ(bl_weighted_norm(SignedDiscreteMeasure(1)).value, 0.0);
}

TEST(BLNorm, WeightedDominatesFlatForNonnegativeMeasures) {
  Philox rng(Philox::stream_key(10));
  for (int trial = 0; trial < 50; ++trial) {
    auto mu = random_measure(rng, 6, 1);
    const auto pos = SignedDiscreteMeasure(mu.positions(), mu.weights().cwiseAbs());
    EXPECT_LE(bl_weighted_norm(pos).value, bl_weighted_norm(pos, kQuadratic.get()).value + 1e-12);
  }
}

TEST(BLNorm, TwoDimensionalFeasibility) {
  Philox rng(Philox::stream_key(12));
  const auto mu = random_measure(rng, 60, 2, 1.5);
  const auto r = bl_weighted_norm(mu, kQuadratic.get());
  EXPECT_EQ(r.solver, "simplex");
  EXPECT_EQ(r.status, "optimal");
  EXPECT_TRUE(bl_feasible(mu, r.phi));
  const auto canon = mu.canonicalize();
  double objective = 0.0;
  for (Eigen::Index i = 0; i < canon.size(); ++i)
    objective += r.phi[i] * canon.weights()[i] * (1.0 + kQuadratic->value(canon.positions().col(i)));
  EXPECT_NEAR(r.value, objective, 1e-9 * std::max(1.0, r.value));
}

TEST(BLOracle, Examples) {
  EXPECT_EQ(bl_bruteforce_oracle(SignedDiscreteMeasure(1)), 0.0);
  const auto dipole = atoms({0.0, 1.0}, {1.0, -1.0});
  EXPECT_NEAR(bl_bruteforce_oracle(dipole, nullptr, 41), 1.0, 0.05);
  const auto mu = atoms({0.0, 1.0, -1.0}, {1.0, -0.5, -0.5});
  EXPECT_NEAR(bl_bruteforce_oracle(mu, nullptr, 41), bl_weighted_norm(mu).value, 2 * 0.05);
  Philox rng(1);
  EXPECT_THROW(bl_bruteforce_oracle(random_measure(rng, 5, 1)), PreconditionError);
}

TEST(KL, Examples) {
  const UniformGrid1D g(-12, 12, 2400);
  const auto sigma = GridDensity1D::from_function(g, [](double x) { return std::exp(-0.5 * x * x); });
  const auto rho = GridDensity1D::from_function(g, [](double x) { return std::exp(-0.5 * (x - 0.5) * (x - 0.5)); });
  EXPECT_EQ(kl_divergence(sigma, sigma), 0.0);
  EXPECT_NEAR(kl_divergence(rho, sigma), 0.125, 1e-4);
  const auto half = GridDensity1D::from_function(g, [](double x) { return x < 0 ? 1.0 : 0.0; });
  const auto other = GridDensity1D::from_function(g, [](double x) { return x > -1 ? 1.0 : 0.0; });
  EXPECT_TRUE(std::isinf(kl_divergence(other, half)));
  EXPECT_THROW(kl_divergence(rho, GridDensity1D::from_function(UniformGrid1D(-12, 12, 100), [](double) { return 1.0; })),
               PreconditionError);
}

TEST(KL, NonnegativeOnRandomPairs) {
  Philox rng(Philox::stream_key(13));
  const UniformGrid1D g(-5, 5, 200);
  for (int trial = 0; trial < 50; ++trial) {
    Vector a(200), b(200);
    for (Eigen::Index i = 0; i < 200; ++i) {
      a[i] = 0.1 + rng.uniform();
      b[i] = 0.1 + rng.uniform();
    }
    const GridDensity1D ra(g, a / (a.sum() * g.spacing())), rb(g, b / (b.sum() * g.spacing()));
    EXPECT_GT(kl_divergence(ra, rb), 0.0);
    EXPECT_NEAR(kl_divergence(ra, ra), 0.0, 1e-8);
  }
}

TEST(SteinDissipation, Examples) {
  const UniformGrid1D g(-12, 12, 2048);
  const auto V = make_quadratic_potential();
  const auto K = make_gaussian_kernel(1.0);
  const TargetDensity target(V, Box::cube(1, -12, 12));
  const auto rho_inf = target_on_grid(target, g);
  const auto at_rest = stein_dissipation(rho_inf, *V, *K);
  EXPECT_LE(std::abs(at_rest.value), 1e-8 * std::max(at_rest.scale, 1.0));

  const auto shifted = GridDensity1D::from_function(g, [](double x) { return std::exp(-0.5 * (x - 0.5) * (x - 0.5)); });
  const auto d = stein_dissipation(shifted, *V, *K);
  EXPECT_GT(d.value, 0.0);
  const auto direct = stein_dissipation(shifted, *V, *K, ConvolutionMethod::direct);
  const auto fft = stein_dissipation(shifted, *V, *K, ConvolutionMethod::fft);
  EXPECT_NEAR(direct.value, fft.value, 1e-10 * direct.scale);
}

TEST(SteinDissipation, NonnegativeAndMatchesDftDomain) {
  Philox rng(Philox::stream_key(14));
  const UniformGrid1D g(-8, 8, 256);
  const auto V = make_quadratic_potential();
  const auto K = make_gaussian_kernel(1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double m = 4 * (rng.uniform() - 0.5), s = 0.5 + rng.uniform(), w = rng.uniform();
    const auto rho = GridDensity1D::from_function(g, [&](double x) {
      return w * std::exp(-0.5 * (x - m) * (x - m) / (s * s)) + (1 - w) * std::exp(-0.5 * (x + 1) * (x + 1));
    });
    const auto d = stein_dissipation(rho, *V, *K);
    EXPECT_GE(d.value, -1e-10 * d.scale);
    Vector src = central_difference(rho.values(), g.spacing());
    for (Eigen::Index i = 0; i < 256; ++i) src[i] += rho.values()[i] * g.center(i);
    EXPECT_NEAR(quadratic_form_dft(src, g.spacing(), *K), d.value, 1e-8 * d.scale);
  }
}

TEST(GridConvolution, DirectAndFftAgree) {
  Philox rng(Philox::stream_key(15));
  Vector f(700);
  for (Eigen::Index i = 0; i < 700; ++i) f[i] = rng.normal();
  auto k = [](double x) { return std::exp(-0.5 * x * x) * (1 + x); };
  const Vector a = grid_convolve(f, 0.03, k, 0.015, ConvolutionMethod::direct);
  const Vector b = grid_convolve(f, 0.03, k, 0.015, ConvolutionMethod::fft);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-8);
}
