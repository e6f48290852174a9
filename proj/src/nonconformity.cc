#include "ellipsoid_cp/nonconformity.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ellipsoid_cp/error.h"

namespace ellipsoid_cp {
namespace {

// The running sum is rebuilt from scratch this often to stop drift.
constexpr int kResumPeriod = 4096;

}  // namespace

ResidualBuffer::ResidualBuffer(int capacity, int dim)
    : capacity_(capacity), dim_(dim), sum_(Eigen::VectorXd::Zero(dim)) {
  Require(capacity >= 1, ErrorCode::kInvalidArgument, "capacity must be >= 1");
  Require(dim >= 1, ErrorCode::kInvalidArgument, "dimension must be >= 1");
}

void ResidualBuffer::Push(const Eigen::VectorXd& residual) {
  Require(residual.size() == dim_, ErrorCode::kDimensionMismatch,
          "residual has dimension " + std::to_string(residual.size()) +
              ", buffer holds " + std::to_string(dim_));
  if (full()) {
    sum_ -= entries_.front();
    entries_.pop_front();
  }
  entries_.push_back(residual);
  sum_ += residual;
  if (++pushes_since_resum_ >= kResumPeriod) {
    sum_.setZero();
    for (const auto& e : entries_) sum_ += e;
    pushes_since_resum_ = 0;
  }
}

Eigen::VectorXd ResidualBuffer::Mean() const {
  Require(!empty(), ErrorCode::kEmptyBuffer, "mean of an empty buffer");
  return sum_ / static_cast<double>(size());
}

Eigen::MatrixXd ResidualBuffer::AsMatrix() const {
  Eigen::MatrixXd out(size(), dim_);
  for (int i = 0; i < size(); ++i) out.row(i) = entries_[i].transpose();
  return out;
}

ScoreSeries::ScoreSeries(int capacity) : capacity_(capacity) {
  Require(capacity >= 1, ErrorCode::kInvalidArgument, "capacity must be >= 1");
}

void ScoreSeries::Push(double score) {
  if (size() == capacity_) scores_.pop_front();
  scores_.push_back(score);
}

std::vector<double> ScoreSeries::Tail(int count) const {
  Require(count <= size(), ErrorCode::kWindowMismatch,
          "requested " + std::to_string(count) + " scores, have " +
              std::to_string(size()));
  return {scores_.end() - count, scores_.end()};
}

double Score(const Eigen::VectorXd& residual, const TruncatedCovariance& tc) {
  return PseudoInverseQuadForm(tc, residual);
}

ScoreSeries RescoreWindow(const ResidualBuffer& buffer, const TruncatedCovariance& tc) {
  Require(!buffer.empty(), ErrorCode::kEmptyBuffer, "cannot score an empty buffer");
  Require(buffer.dim() == tc.dim(), ErrorCode::kDimensionMismatch,
          "buffer and covariance dimensions differ");
  // Batch form of Score(): project all centered residuals at once.
  const Eigen::MatrixXd centered =
      buffer.AsMatrix().rowwise() - tc.mean().transpose();
  const Eigen::ArrayXXd projected =
      (centered * tc.basis()).array().rowwise() /
      tc.eigenvalues().cwiseSqrt().transpose().array();
  ScoreSeries out(buffer.capacity());
  for (Eigen::Index i = 0; i < projected.rows(); ++i) {
    out.Push(projected.row(i).square().sum());
  }
  return out;
}

int LocalCovConfig::NeighborCount(int history) const {
  Require(neighbor_fraction > 0.0 && neighbor_fraction <= 1.0,
          ErrorCode::kInvalidArgument, "neighbor_fraction must lie in (0, 1]");
  // Guard against 0.1 * 100 landing a hair above 10.
  return static_cast<int>(std::ceil(neighbor_fraction * history - 1e-9));
}

CovarianceEstimate LocalCovariance(const ResidualBuffer& buffer,
                                   const Eigen::VectorXd& test_feature,
                                   std::span<const Eigen::VectorXd> past_features,
                                   const LocalCovConfig& cfg,
                                   const CovarianceEstimate& global) {
  Require(cfg.blend >= 0.0 && cfg.blend <= 1.0, ErrorCode::kInvalidArgument,
          "blend must lie in [0, 1]");
  Require(static_cast<int>(past_features.size()) == buffer.size(),
          ErrorCode::kMisalignedHistory,
          std::to_string(past_features.size()) + " features for " +
              std::to_string(buffer.size()) + " residuals");
  Require(global.dim() == buffer.dim(), ErrorCode::kDimensionMismatch,
          "global covariance dimension differs from buffer");
  const int k = cfg.NeighborCount(buffer.size());
  Require(k >= 2 && k <= buffer.size(), ErrorCode::kTooFewNeighbors,
          "neighbour count " + std::to_string(k) + " invalid for history of " +
              std::to_string(buffer.size()));

  std::vector<double> distance(past_features.size());
  for (size_t i = 0; i < past_features.size(); ++i) {
    Require(past_features[i].size() == test_feature.size(),
            ErrorCode::kDimensionMismatch, "feature widths differ");
    distance[i] = (past_features[i] - test_feature).squaredNorm();
  }
  std::vector<int> order(distance.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&](int a, int b) {
                      return distance[a] != distance[b] ? distance[a] < distance[b]
                                                        : a < b;
                    });
  Eigen::MatrixXd neighbours(k, buffer.dim());
  for (int j = 0; j < k; ++j) neighbours.row(j) = buffer[order[j]].transpose();
  const CovarianceEstimate local = EstimateCovariance(neighbours);

  CovarianceEstimate out;
  out.matrix = cfg.blend * local.matrix + (1.0 - cfg.blend) * global.matrix;
  out.mean = global.mean;
  out.sample_count = global.sample_count;
  return out;
}

}  // namespace ellipsoid_cp
