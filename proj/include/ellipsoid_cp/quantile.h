#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace ellipsoid_cp {

// 1-based rank ceil(q * n), clamped to [1, n]. q = 0 selects the minimum and
// q = 1 the maximum. A relative slack of 1e-9 absorbs round-off in q * n.
size_t OrderStatisticRank(size_t n, double q);

// The ceil(q * n)-th order statistic (no interpolation). q must lie in [0, 1].
double EmpiricalQuantile(std::span<const double> scores, double q);

// A sorted sample standing in for a conditional distribution.
class ConditionalQuantiles {
 public:
  explicit ConditionalQuantiles(std::vector<double> sample);

  double At(double q) const;
  std::span<const double> sorted() const { return sorted_; }
  size_t size() const { return sorted_.size(); }

 private:
  std::vector<double> sorted_;
};

// Conditional quantile estimator over a score series. The context passed to
// Condition() is the most recent `window()` scores, oldest first.
class QuantileModel {
 public:
  virtual ~QuantileModel() = default;

  virtual int window() const = 0;
  virtual ConditionalQuantiles Condition(std::span<const double> recent) const = 0;

  double Query(std::span<const double> recent, double q) const {
    return Condition(recent).At(q);
  }
};

// Ignores the context: quantiles of the scores seen at fit time.
class EmpiricalQuantileModel : public QuantileModel {
 public:
  EmpiricalQuantileModel(std::span<const double> scores, int window);

  int window() const override { return window_; }
  ConditionalQuantiles Condition(std::span<const double> recent) const override;

 private:
  std::vector<double> sorted_;
  int window_;
};

struct QrfConfig {
  int n_trees = 20;
  int max_depth = 6;
  int min_leaf = 5;
  double subsample_fraction = 0.8;
  std::uint64_t rng_seed = 0;
  // Lags examined at each split; 0 means max(1, window / 3).
  int features_per_split = 0;
  // Split thresholds are restricted to at most this many quantile cut points
  // of the score series.
  int max_bins = 64;
};

// Quantile regression forest on lag windows of a single score series.
// Training rows are (e_{t-w}, ..., e_{t-1}) -> e_t. Each tree is a CART
// regression tree grown on a row subsample (without replacement), choosing
// splits by variance reduction; leaves keep every in-sample target.
class QuantileForest : public QuantileModel {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    int threshold_bin = 0;
    int left = -1;
    int right = -1;
    int leaf_begin = 0;
    int leaf_end = 0;
    bool operator==(const Node&) const = default;
  };
  struct Tree {
    std::vector<Node> nodes;
    std::vector<double> leaf_values;
    bool operator==(const Tree&) const = default;
  };

  static QuantileForest Fit(std::span<const double> scores, int window,
                            const QrfConfig& cfg);

  int window() const override { return window_; }
  ConditionalQuantiles Condition(std::span<const double> recent) const override;

  // Every leaf sample reached by `recent`, pooled across trees (unsorted).
  std::vector<double> PooledLeafValues(std::span<const double> recent) const;

  const std::vector<Tree>& trees() const { return trees_; }
  const std::vector<double>& bin_edges() const { return bin_edges_; }

  bool operator==(const QuantileForest& other) const {
    return window_ == other.window_ && bin_edges_ == other.bin_edges_ &&
           trees_ == other.trees_;
  }

 private:
  int Bin(double value) const;

  int window_ = 0;
  std::vector<double> bin_edges_;
  std::vector<Tree> trees_;
};

enum class QuantileKind { kEmpirical, kQrf };

struct QuantileEngineConfig {
  QuantileKind kind = QuantileKind::kQrf;
  int window = 20;
  QrfConfig qrf;
  // Refit the model every this many test steps (1 = every step).
  int refit_stride = 1;
};

std::unique_ptr<QuantileModel> FitQuantileModel(const QuantileEngineConfig& cfg,
                                                std::span<const double> scores);

}  // namespace ellipsoid_cp
