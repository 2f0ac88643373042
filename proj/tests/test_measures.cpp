#include "steinlab/measures.hpp"
#include "steinlab/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace steinlab;

namespace {

SignedDiscreteMeasure atoms(std::vector<double> xs, std::vector<double> ws) {
  PointCloud p(1, static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) p(0, static_cast<Eigen::Index>(i)) = xs[i];
  return SignedDiscreteMeasure(p, Eigen::Map<Vector>(ws.data(), static_cast<Eigen::Index>(ws.size())));
}

TargetDensity standard_normal() { return TargetDensity(make_quadratic_potential(), Box::cube(1, -12, 12)); }

}  // namespace

TEST(ComputeZ, GaussianOneDimension) {
  EXPECT_NEAR(compute_Z(*make_quadratic_potential(), Box::cube(1, -12, 12), 4097), std::sqrt(2 * std::numbers::pi), 1e-7);
}

TEST(ComputeZ, ZeroPotentialUnitInterval) {
  EXPECT_NEAR(compute_Z(*make_zero_potential(), Box::cube(1, 0, 1), 64), 1.0, 1e-14);
}

TEST(ComputeZ, GaussianTwoDimensions) {
  EXPECT_NEAR(compute_Z(*make_quadratic_potential(), Box::cube(2, -12, 12), 512), 2 * std::numbers::pi, 1e-7);
}

TEST(ComputeZ, RejectsThreeDimensions) {
  EXPECT_THROW(compute_Z(*make_quadratic_potential(), Box::cube(3, -1, 1), 64), PreconditionError);
}

TEST(TargetDensity, RefinedNormalisation) {
  const TargetDensity t = standard_normal();
  EXPECT_NEAR(t.Z(), std::sqrt(2 * std::numbers::pi), 1e-6);
  EXPECT_LT(t.tail_mass(), 1e-8);
}

TEST(TargetDensity, NarrowBoxFailsTailCheck) {
  EXPECT_THROW(TargetDensity(make_quadratic_potential(), Box::cube(1, -1, 1)), PreconditionError);
}

TEST(TargetDensity, StationarityIdentity) {
  const TargetDensity t = standard_normal();
  const auto& V = t.potential();
  double worst = 0.0, peak = 0.0;
  for (double x = -12; x <= 12; x += 0.01) {
    Vector q = Vector::Constant(1, x);
    worst = std::max(worst, (t.density_gradient(q) + t.density(q) * V.gradient(q)).norm());
    peak = std::max(peak, t.density(q));
  }
  EXPECT_LT(worst, 1e-10 * peak);
}

TEST(Quadrature, SymmetricWeightsOnNarrowWindow) {
  const auto q = quadrature_measure(standard_normal(), 3, Box::cube(1, -1, 1));
  ASSERT_EQ(q.size(), 3);
  EXPECT_DOUBLE_EQ(q.weights()[0], q.weights()[2]);
  EXPECT_NEAR(q.total_mass(), 1.0, 1e-15);
}

TEST(Quadrature, UniformDensityGivesEqualInteriorWeights) {
  const TargetDensity t(make_zero_potential(), Box::cube(1, 0, 1));
  const auto q = quadrature_measure(t, 6);
  // Trapezoid weights: interior atoms equal, end atoms half.
  for (Eigen::Index i = 2; i < 5; ++i) EXPECT_DOUBLE_EQ(q.weights()[i], q.weights()[1]);
  EXPECT_DOUBLE_EQ(q.weights()[0], 0.5 * q.weights()[1]);
}

TEST(Quadrature, RefinementFlatNorm) {
  // The two node sets interleave, so a test function alternating with amplitude
  // a quarter of the coarse spacing separates them: the flat distance is
  // h / 4 = 0.003 for h = 24 / 2000, not a higher-order quantity.
  const TargetDensity t = standard_normal();
  const double d = bl_weighted_norm(subtract(quadrature_measure(t, 2001), quadrature_measure(t, 4001))).value;
  EXPECT_NEAR(d, 0.003, 1e-9);
  const double d2 = bl_weighted_norm(subtract(quadrature_measure(t, 4001), quadrature_measure(t, 8001))).value;
  EXPECT_NEAR(d / d2, 2.0, 1e-6);
}

TEST(Quadrature, SecondMoment) {
  EXPECT_NEAR(moment(quadrature_measure(standard_normal(), 2001), 2.0), 1.0, 1e-4);
}

TEST(Quadrature, TwoDimensionalMass) {
  const TargetDensity t(make_quadratic_potential(), Box::cube(2, -10, 10), 128);
  const auto q = quadrature_measure(t, 81);
  EXPECT_EQ(q.size(), 81 * 81);
  EXPECT_NEAR(q.total_mass(), 1.0, 1e-12);
  EXPECT_NEAR(moment(q, 2.0), 2.0, 1e-3);
}

TEST(Subtract, SelfDifferenceIsEmpty) {
  const auto a = atoms({0.0, 1.0, 2.5}, {0.2, 0.3, 0.5});
  const auto d = subtract(a, a);
  EXPECT_EQ(d.size(), 0);
  EXPECT_EQ(bl_weighted_norm(d).value, 0.0);
}

TEST(Subtract, DiracDifference) {
  const auto d = subtract(SignedDiscreteMeasure::dirac(Vector::Constant(1, 0.0)),
                          SignedDiscreteMeasure::dirac(Vector::Constant(1, 1.0)));
  ASSERT_EQ(d.size(), 2);
  EXPECT_EQ(d.positions()(0, 0), 0.0);
  EXPECT_EQ(d.weights()[0], 1.0);
  EXPECT_EQ(d.positions()(0, 1), 1.0);
  EXPECT_EQ(d.weights()[1], -1.0);
  EXPECT_EQ(d.total_mass(), 0.0);
}

TEST(Subtract, EnsembleMinusDirac) {
  const auto d = subtract(ParticleEnsemble::from_values({0.0, 1.0}), SignedDiscreteMeasure::dirac(Vector::Constant(1, 0.0)));
  ASSERT_EQ(d.size(), 2);
  EXPECT_EQ(d.weights()[0], -0.5);
  EXPECT_EQ(d.weights()[1], 0.5);
}

TEST(Subtract, DimensionMismatch) {
  EXPECT_THROW(subtract(SignedDiscreteMeasure(1), SignedDiscreteMeasure(2)), PreconditionError);
}

TEST(Canonicalize, MergesNearDuplicatesAndIsIdempotent) {
  const auto m = atoms({1.0, 0.0, 1.0 + 1e-13, 0.5, 0.5}, {0.25, 1.0, 0.25, 0.3, -0.3});
  const auto c = m.canonicalize();
  ASSERT_EQ(c.size(), 2);
  EXPECT_EQ(c.positions()(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(c.weights()[1], 0.5);
  const auto cc = c.canonicalize();
  EXPECT_EQ(cc.positions(), c.positions());
  EXPECT_EQ(cc.weights(), c.weights());
}

TEST(Canonicalize, PositiveAndNegativeParts) {
  const auto m = atoms({0.0, 1.0, 2.0}, {0.5, -0.25, 0.75});
  EXPECT_DOUBLE_EQ(m.positive_part().total_mass(), 1.25);
  EXPECT_DOUBLE_EQ(m.negative_part().total_mass(), 0.25);
  EXPECT_DOUBLE_EQ(m.scaled(-2.0).total_mass(), -2.0);
}

TEST(Moment, Examples) {
  EXPECT_EQ(moment(SignedDiscreteMeasure::dirac(Vector::Constant(1, 0.0)), 2.0), 0.0);
  EXPECT_EQ(moment(ParticleEnsemble::from_values({-1.0, 1.0}), 2.0), 1.0);
}

TEST(Ensemble, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(ParticleEnsemble(PointCloud(1, 0)), PreconditionError);
  EXPECT_THROW(ParticleEnsemble::from_values({0.0, std::nan("")}), PreconditionError);
}

TEST(GridDensity, MassToleranceEnforced) {
  const UniformGrid1D g(0, 1, 10);
  EXPECT_NO_THROW(GridDensity1D(g, Vector::Constant(10, 1.0)));
  EXPECT_THROW(GridDensity1D(g, Vector::Constant(10, 1.1)), PreconditionError);
  Vector v = Vector::Constant(10, 1.0);
  v[3] = -0.1;
  EXPECT_THROW(GridDensity1D(g, v, 0.99), PreconditionError);
}

TEST(CsvRoundTrip, MeasureAndGrid) {
  const auto m = atoms({-0.1, 0.3, 7.25}, {0.1, -1.0 / 3.0, 0.9});
  std::stringstream s;
  write_csv(s, m);
  const auto back = read_measure_csv(s);
  EXPECT_EQ(back.positions(), m.positions());
  EXPECT_EQ(back.weights(), m.weights());

  const auto rho = GridDensity1D::from_function(UniformGrid1D(-3, 3, 17), [](double x) { return std::exp(-x * x); });
  std::stringstream g;
  write_csv(g, rho);
  const auto rback = read_grid_csv(g);
  EXPECT_EQ(rback.grid(), rho.grid());
  EXPECT_EQ(rback.values(), rho.values());
}

TEST(Sampling, TargetSamplerMoments) {
  Philox rng(Philox::stream_key(3, 1, 2));
  const auto e = sample_target(standard_normal(), 20000, rng);
  EXPECT_NEAR(e.positions().mean(), 0.0, 0.03);
  EXPECT_NEAR(moment(e, 2.0), 1.0, 0.05);
}

TEST(Sampling, RejectionInTwoDimensions) {
  const TargetDensity t(make_quadratic_potential(0.5), Box::cube(2, -16, 16), 128);
  Philox rng(Philox::stream_key(5));
  const auto e = sample_target(t, 10000, rng);
  // V = |x|^2 / 4, so each coordinate has variance 2.
  EXPECT_NEAR(moment(e, 2.0), 4.0, 0.25);
}

TEST(Sampling, DeterministicStreams) {
  Philox a(Philox::stream_key(9, 100, 3)), b(Philox::stream_key(9, 100, 3)), c(Philox::stream_key(9, 100, 4));
  const auto x = sample_target(standard_normal(), 50, a);
  EXPECT_EQ(x.positions(), sample_target(standard_normal(), 50, b).positions());
  EXPECT_NE(x.positions(), sample_target(standard_normal(), 50, c).positions());
}

TEST(Philox, KnownAnswer) {
  // Counter 0, key 0: the reference Random123 output.
  Philox rng(0);
  EXPECT_EQ(rng.next_u32(), 0x6627e8d5u);
  EXPECT_EQ(rng.next_u32(), 0xe169c58du);
  EXPECT_EQ(rng.next_u32(), 0xbc57ac4cu);
  EXPECT_EQ(rng.next_u32(), 0x9b00dbd8u);
}
