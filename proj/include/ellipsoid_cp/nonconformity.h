#pragma once

#include <deque>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ellipsoid_cp/ellipsoid.h"

namespace ellipsoid_cp {

// Fixed-capacity window of the most recent vector residuals. Pushing at
// capacity evicts the oldest entry. A running sum is kept for the mean.
class ResidualBuffer {
 public:
  ResidualBuffer(int capacity, int dim);

  void Push(const Eigen::VectorXd& residual);

  int capacity() const { return capacity_; }
  int dim() const { return dim_; }
  int size() const { return static_cast<int>(entries_.size()); }
  bool empty() const { return entries_.empty(); }
  bool full() const { return size() == capacity_; }

  const Eigen::VectorXd& operator[](int i) const { return entries_[i]; }
  const Eigen::VectorXd& oldest() const { return entries_.front(); }
  const Eigen::VectorXd& newest() const { return entries_.back(); }

  Eigen::VectorXd Mean() const;
  // Entries stacked as rows, oldest first.
  Eigen::MatrixXd AsMatrix() const;

 private:
  int capacity_;
  int dim_;
  std::deque<Eigen::VectorXd> entries_;
  Eigen::VectorXd sum_;
  int pushes_since_resum_ = 0;
};

// Scalar non-conformity scores with the same eviction discipline.
class ScoreSeries {
 public:
  explicit ScoreSeries(int capacity);

  void Push(double score);

  int capacity() const { return capacity_; }
  int size() const { return static_cast<int>(scores_.size()); }
  bool empty() const { return scores_.empty(); }
  double operator[](int i) const { return scores_[i]; }

  std::vector<double> Values() const { return {scores_.begin(), scores_.end()}; }
  // The last `count` scores, oldest first.
  std::vector<double> Tail(int count) const;

 private:
  int capacity_;
  std::deque<double> scores_;
};

double Score(const Eigen::VectorXd& residual, const TruncatedCovariance& tc);

// Scores every buffered residual under one shared truncated covariance.
ScoreSeries RescoreWindow(const ResidualBuffer& buffer, const TruncatedCovariance& tc);

struct LocalCovConfig {
  double neighbor_fraction = 0.1;
  double blend = 0.95;

  int NeighborCount(int history) const;
};

// lambda * Cov(k nearest neighbours) + (1 - lambda) * global. Neighbours are
// ranked by Euclidean distance between raw features; ties go to the older
// entry. `past_features[i]` must belong to `buffer[i]`.
CovarianceEstimate LocalCovariance(const ResidualBuffer& buffer,
                                   const Eigen::VectorXd& test_feature,
                                   std::span<const Eigen::VectorXd> past_features,
                                   const LocalCovConfig& cfg,
                                   const CovarianceEstimate& global);

}  // namespace ellipsoid_cp
