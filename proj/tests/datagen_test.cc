#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ellipsoid_cp/datagen.h"
#include "ellipsoid_cp/ellipsoid.h"
#include "oracles.h"

namespace ellipsoid_cp {
namespace {

// Gelfand's formula: ||C^k||^(1/k) -> spectral radius.
double PowerRadius(const Eigen::MatrixXd& c) {
  Eigen::MatrixXd m = c;
  double log_scale = 0.0;
  const int k = 2048;
  for (int i = 0; i < 11; ++i) {  // m = c^(2^11)
    m = m * m;
    log_scale *= 2.0;
    const double norm = m.norm();
    if (norm == 0.0) return 0.0;
    m /= norm;
    log_scale += std::log(norm);
  }
  return std::exp(log_scale / k);
}

TEST(MakeArSpec, FixtureCoefficient) {
  VarProcessSpec spec;
  spec.coefficients = {Eigen::MatrixXd::Constant(1, 1, 0.5)};
  spec.noise_cov = Eigen::MatrixXd::Identity(1, 1);
  EXPECT_NEAR(CompanionSpectralRadius(spec), 0.5, 1e-12);
}

TEST(MakeArSpec, ZeroCoefficientsAreWhiteNoise) {
  VarProcessSpec spec;
  spec.dim = 2;
  spec.order = 3;
  spec.coefficients.assign(3, Eigen::MatrixXd::Zero(2, 2));
  spec.noise_cov = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_EQ(CompanionSpectralRadius(spec), 0.0);
  RescaleSpectralRadius(spec, 0.95);
  EXPECT_TRUE(spec.coefficients[0].isZero());
}

TEST(MakeArSpec, RadiusAtTargetForAnySeed) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto spec = MakeArSpec(3, 5, seed);
    EXPECT_NEAR(CompanionSpectralRadius(spec), 0.95, 1e-9);
    EXPECT_NEAR(PowerRadius(CompanionMatrix(spec)), 0.95, 0.01);
    EXPECT_TRUE(spec.noise_cov.isIdentity());
    for (const auto& a : spec.coefficients) EXPECT_TRUE(Eigen::MatrixXd(a).isDiagonal());
  }
  const auto capped = MakeArSpec(2, 3, 5, 0.5);
  EXPECT_NEAR(CompanionSpectralRadius(capped), 0.475, 1e-9);
}

TEST(MakeVarSpec, NoiseCovariance) {
  const auto spec = MakeVarSpec(3, 5, 77);
  EXPECT_TRUE(spec.noise_cov.isApprox(spec.noise_cov.transpose()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(spec.noise_cov);
  EXPECT_GE(es.eigenvalues().minCoeff(), 1e-8);
  EXPECT_NE(spec.noise_cov(0, 1), 0.0);
  EXPECT_NE(spec.noise_cov(1, 2), 0.0);
  EXPECT_NEAR(PowerRadius(CompanionMatrix(spec)), 0.95, 0.01);
}

TEST(Simulate, NoiseMatchesCovariance) {
  auto spec = MakeVarSpec(2, 1, 13);
  spec.coefficients[0].setZero();
  const auto series = Simulate(spec, 100000, 0);
  const auto cov = EstimateCovariance(series.values);
  EXPECT_LT((cov.matrix - spec.noise_cov).cwiseAbs().maxCoeff(),
            0.02 * spec.noise_cov.cwiseAbs().maxCoeff());
}

TEST(Simulate, WhiteNoiseIsStandardNormal) {
  VarProcessSpec spec;
  spec.dim = 1;
  spec.order = 1;
  spec.coefficients = {Eigen::MatrixXd::Zero(1, 1)};
  spec.noise_cov = Eigen::MatrixXd::Identity(1, 1);
  spec.seed = 17;
  const auto series = Simulate(spec, 10000, 0);
  std::vector<double> xs(series.values.data(), series.values.data() + 10000);
  EXPECT_GT(oracle::KsPValue(oracle::KsStatistic(xs), xs.size()), 0.001);
}

TEST(Simulate, EmptyAndDeterministic) {
  const auto spec = MakeArSpec(2, 2, 3);
  EXPECT_EQ(Simulate(spec, 0, 100).length(), 0);
  const auto a = Simulate(spec, 500);
  const auto b = Simulate(spec, 500);
  EXPECT_EQ(a.values, b.values);
  auto other = spec;
  other.seed = 4;
  EXPECT_NE(Simulate(other, 500).values, a.values);
}

TEST(Simulate, UniformCubeNoise) {
  VarProcessSpec spec;
  spec.dim = 4;
  spec.order = 1;
  spec.coefficients = {Eigen::MatrixXd::Zero(4, 4)};
  spec.noise = NoiseKind::kUniformCube;
  const auto series = Simulate(spec, 5000, 0);
  EXPECT_LE(series.values.cwiseAbs().maxCoeff(), 1.0);
  EXPECT_NEAR(series.values.array().square().mean(), 1.0 / 3.0, 0.02);
}

TEST(Simulate, StationaritySmoke) {
  const auto spec = MakeArSpec(2, 5, 21);
  const int n = 20000;
  const auto series = Simulate(spec, n);
  for (int j = 0; j < 2; ++j) {
    const Eigen::VectorXd col = series.values.col(j);
    // Long-run sigma from batch means, since the series is autocorrelated.
    const int batch = 400;
    const int batches = n / batch;
    Eigen::VectorXd means(batches);
    for (int b = 0; b < batches; ++b) means(b) = col.segment(b * batch, batch).mean();
    const double sigma =
        std::sqrt((means.array() - means.mean()).square().sum() / (batches - 1) * batch);
    const double gap = std::abs(col.head(n / 2).mean() - col.tail(n / 2).mean());
    EXPECT_LT(gap, 5.0 * sigma / std::sqrt(static_cast<double>(n)));
  }
}

TEST(Simulate, BurnInRemovesTransient) {
  // Continuing from an arbitrary state, early and late windows agree once the
  // burn-in has passed.
  const auto spec = MakeArSpec(1, 2, 31);
  double early = 0.0, late = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    auto s = spec;
    s.seed = 1000 + rep;
    const auto series = Simulate(s, 1000);
    early += series.values.col(0).head(100).mean();
    late += series.values.col(0).segment(900, 100).mean();
  }
  EXPECT_NEAR(early / 200.0, late / 200.0, 0.5);
}

}  // namespace
}  // namespace ellipsoid_cp
