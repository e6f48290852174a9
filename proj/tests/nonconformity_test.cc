#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ellipsoid_cp/nonconformity.h"
#include "oracles.h"
#include "test_util.h"

namespace ellipsoid_cp {
namespace {

using testing::CodeOf;

TruncatedCovariance IdentityTc(int p, Eigen::VectorXd mean) {
  return Truncate(Eigen::MatrixXd::Identity(p, p), mean, kDefaultRho);
}

TEST(Score, ResidualAtMeanIsZero) {
  const Eigen::Vector2d mean(0.3, -1.2);
  EXPECT_EQ(Score(mean, IdentityTc(2, mean)), 0.0);
}

TEST(Score, PythagoreanTriple) {
  EXPECT_DOUBLE_EQ(Score(Eigen::Vector2d(3, 4), IdentityTc(2, Eigen::Vector2d::Zero())), 25.0);
}

TEST(Score, ChiSquareQuantile) {
  std::mt19937_64 rng(101);
  for (int p : {2, 3}) {
    const Eigen::MatrixXd rows = oracle::GaussianRows(100000, Eigen::MatrixXd::Identity(p, p), rng);
    const auto tc = IdentityTc(p, Eigen::VectorXd::Zero(p));
    std::vector<double> scores;
    for (int i = 0; i < rows.rows(); ++i) scores.push_back(Score(rows.row(i).transpose(), tc));
    const double expected = oracle::Chi2Quantile(0.9, p);
    EXPECT_NEAR(oracle::OrderStatistic(scores, 0.9) / expected, 1.0, 0.03) << "p=" << p;
  }
}

TEST(Score, DiscardedCoordinateIsIgnored) {
  std::mt19937_64 rng(103);
  std::normal_distribution<double> n01;
  const Eigen::MatrixXd sigma = oracle::RandomSpd(2, rng);
  Eigen::Matrix3d padded = Eigen::Matrix3d::Zero();
  padded.topLeftCorner(2, 2) = sigma;
  padded(2, 2) = 1e-8;
  const auto small = Truncate(sigma, Eigen::Vector2d::Zero(), kDefaultRho);
  const auto big = Truncate(padded, Eigen::Vector3d::Zero(), kDefaultRho);
  for (int i = 0; i < 20; ++i) {
    const Eigen::Vector2d e(n01(rng), n01(rng));
    const Eigen::Vector3d e3(e(0), e(1), 50.0 * n01(rng));
    EXPECT_NEAR(Score(e3, big), Score(e, small), 1e-9 * (1.0 + Score(e, small)));
  }
}

TEST(ResidualBuffer, EvictionKeepsLastT) {
  const int capacity = 7;
  for (int extra : {1, 5, capacity}) {
    ResidualBuffer buffer(capacity, 1);
    for (int i = 0; i < capacity + extra; ++i) buffer.Push(Eigen::VectorXd::Constant(1, i));
    ASSERT_EQ(buffer.size(), capacity);
    for (int i = 0; i < capacity; ++i) EXPECT_EQ(buffer[i](0), extra + i);
    EXPECT_EQ(buffer.oldest()(0), extra);
    EXPECT_EQ(buffer.newest()(0), capacity + extra - 1);
  }
}

TEST(ResidualBuffer, RunningMeanMatchesRecompute) {
  std::mt19937_64 rng(107);
  std::normal_distribution<double> n01;
  ResidualBuffer buffer(50, 2);
  for (int i = 0; i < 10000; ++i) buffer.Push(Eigen::Vector2d(n01(rng) + 100.0, n01(rng)));
  const Eigen::VectorXd direct = buffer.AsMatrix().colwise().mean().transpose();
  EXPECT_TRUE(buffer.Mean().isApprox(direct, 1e-12));
}

TEST(ResidualBuffer, Errors) {
  ResidualBuffer buffer(3, 2);
  EXPECT_EQ(CodeOf([&] { buffer.Mean(); }), ErrorCode::kEmptyBuffer);
  EXPECT_EQ(CodeOf([&] { buffer.Push(Eigen::Vector3d::Zero()); }),
            ErrorCode::kDimensionMismatch);
}

TEST(ScoreSeries, EvictionAndTail) {
  ScoreSeries scores(4);
  for (int i = 0; i < 9; ++i) scores.Push(i);
  EXPECT_EQ(scores.Values(), (std::vector<double>{5, 6, 7, 8}));
  EXPECT_EQ(scores.Tail(2), (std::vector<double>{7, 8}));
  EXPECT_EQ(CodeOf([&] { scores.Tail(5); }), ErrorCode::kWindowMismatch);
}

TEST(RescoreWindow, SingleResidualAtMean) {
  const Eigen::Vector2d mean(1, 2);
  ResidualBuffer buffer(1, 2);
  buffer.Push(mean);
  EXPECT_EQ(RescoreWindow(buffer, IdentityTc(2, mean)).Values(), (std::vector<double>{0.0}));
}

TEST(RescoreWindow, UnitVectors) {
  ResidualBuffer buffer(2, 2);
  buffer.Push(Eigen::Vector2d(1, 0));
  buffer.Push(Eigen::Vector2d(0, 1));
  const auto scores = RescoreWindow(buffer, IdentityTc(2, Eigen::Vector2d::Zero())).Values();
  EXPECT_NEAR(scores[0], 1.0, 1e-14);
  EXPECT_NEAR(scores[1], 1.0, 1e-14);
}

TEST(RescoreWindow, OrderPreservedAndMatchesScore) {
  std::mt19937_64 rng(109);
  const Eigen::MatrixXd rows = oracle::GaussianRows(30, oracle::RandomSpd(3, rng), rng);
  ResidualBuffer forward(30, 3), backward(30, 3);
  for (int i = 0; i < 30; ++i) {
    forward.Push(rows.row(i).transpose());
    backward.Push(rows.row(29 - i).transpose());
  }
  const auto cov = EstimateCovariance(rows);
  const auto tc = Truncate(cov, kDefaultRho);
  const auto a = RescoreWindow(forward, tc).Values();
  const auto b = RescoreWindow(backward, tc).Values();
  for (int i = 0; i < 30; ++i) {
    EXPECT_NEAR(a[i], b[29 - i], 1e-12 * (1 + a[i]));
    EXPECT_NEAR(a[i], Score(rows.row(i).transpose(), tc), 1e-10 * (1 + a[i]));
  }
}

TEST(RescoreWindow, EmptyBuffer) {
  ResidualBuffer buffer(3, 2);
  EXPECT_EQ(CodeOf([&] { RescoreWindow(buffer, IdentityTc(2, Eigen::Vector2d::Zero())); }),
            ErrorCode::kEmptyBuffer);
}

struct LocalFixture {
  ResidualBuffer buffer{40, 2};
  std::vector<Eigen::VectorXd> features;
  CovarianceEstimate global;

  LocalFixture() {
    std::mt19937_64 rng(113);
    std::normal_distribution<double> n01;
    for (int i = 0; i < 40; ++i) {
      buffer.Push(Eigen::Vector2d(n01(rng), 2.0 * n01(rng)));
      features.push_back(Eigen::Vector3d(n01(rng), n01(rng), 1.0));
    }
    global = EstimateCovariance(buffer.AsMatrix());
  }
};

TEST(LocalCovariance, BlendZeroIsGlobal) {
  LocalFixture f;
  LocalCovConfig cfg{0.25, 0.0};
  const auto out = LocalCovariance(f.buffer, f.features[3], f.features, cfg, f.global);
  EXPECT_EQ(out.matrix, f.global.matrix);
  EXPECT_EQ(out.mean, f.global.mean);
}

TEST(LocalCovariance, FullNeighbourhoodIsBufferCovariance) {
  LocalFixture f;
  LocalCovConfig cfg{1.0, 1.0};
  const auto out = LocalCovariance(f.buffer, f.features[0], f.features, cfg, f.global);
  EXPECT_TRUE(out.matrix.isApprox(EstimateCovariance(f.buffer.AsMatrix()).matrix, 1e-12));
}

TEST(LocalCovariance, HalfBlendIsMidpoint) {
  LocalFixture f;
  CovarianceEstimate other = f.global;
  other.matrix = Eigen::Matrix2d::Identity() * 7.0;
  LocalCovConfig cfg{1.0, 0.5};
  const auto out = LocalCovariance(f.buffer, f.features[0], f.features, cfg, other);
  const Eigen::MatrixXd expected = 0.5 * (f.global.matrix + other.matrix);
  EXPECT_TRUE(out.matrix.isApprox(expected, 1e-12));
}

TEST(LocalCovariance, NearestNeighboursOracle) {
  LocalFixture f;
  LocalCovConfig cfg{0.25, 1.0};  // k = 10
  const Eigen::VectorXd query = Eigen::Vector3d(0.2, -0.4, 1.0);
  std::vector<std::pair<double, int>> order;
  for (int i = 0; i < 40; ++i) order.push_back({(f.features[i] - query).squaredNorm(), i});
  std::sort(order.begin(), order.end());
  Eigen::MatrixXd rows(10, 2);
  for (int k = 0; k < 10; ++k) rows.row(k) = f.buffer[order[k].second].transpose();
  const auto out = LocalCovariance(f.buffer, query, f.features, cfg, f.global);
  EXPECT_TRUE(out.matrix.isApprox(EstimateCovariance(rows).matrix, 1e-12));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.matrix);
  EXPECT_GE(es.eigenvalues().minCoeff(), 0.0);
}

TEST(LocalCovariance, Errors) {
  LocalFixture f;
  std::vector<Eigen::VectorXd> short_history(f.features.begin(), f.features.begin() + 5);
  EXPECT_EQ(CodeOf([&] {
              LocalCovariance(f.buffer, f.features[0], short_history, {}, f.global);
            }),
            ErrorCode::kMisalignedHistory);
  LocalCovConfig tiny{0.01, 0.95};  // k = 1
  EXPECT_EQ(CodeOf([&] { LocalCovariance(f.buffer, f.features[0], f.features, tiny, f.global); }),
            ErrorCode::kTooFewNeighbors);
}

TEST(LocalCovConfig, NeighborCount) {
  EXPECT_EQ(LocalCovConfig{}.NeighborCount(100), 10);
  EXPECT_EQ(LocalCovConfig{}.NeighborCount(101), 11);
  EXPECT_EQ((LocalCovConfig{1.0, 0.5}.NeighborCount(40)), 40);
}

}  // namespace
}  // namespace ellipsoid_cp
