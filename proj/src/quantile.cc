#include "ellipsoid_cp/quantile.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "ellipsoid_cp/error.h"

namespace ellipsoid_cp {

size_t OrderStatisticRank(size_t n, double q) {
  Require(n > 0, ErrorCode::kEmptyInput, "quantile of an empty sample");
  Require(q >= 0.0 && q <= 1.0, ErrorCode::kLevelOutOfRange,
          "quantile level " + std::to_string(q) + " outside [0, 1]");
  const double x = q * static_cast<double>(n);
  const double rank = std::ceil(x - 1e-9 * std::max(1.0, x));
  return std::clamp<size_t>(static_cast<size_t>(std::max(rank, 1.0)), 1, n);
}

double EmpiricalQuantile(std::span<const double> scores, double q) {
  const size_t rank = OrderStatisticRank(scores.size(), q);
  std::vector<double> copy(scores.begin(), scores.end());
  std::nth_element(copy.begin(), copy.begin() + (rank - 1), copy.end());
  return copy[rank - 1];
}

ConditionalQuantiles::ConditionalQuantiles(std::vector<double> sample)
    : sorted_(std::move(sample)) {
  Require(!sorted_.empty(), ErrorCode::kEmptyInput, "empty conditional sample");
  std::sort(sorted_.begin(), sorted_.end());
}

double ConditionalQuantiles::At(double q) const {
  return sorted_[OrderStatisticRank(sorted_.size(), q) - 1];
}

EmpiricalQuantileModel::EmpiricalQuantileModel(std::span<const double> scores,
                                               int window)
    : sorted_(scores.begin(), scores.end()), window_(window) {
  Require(!sorted_.empty(), ErrorCode::kEmptyInput, "no scores to fit");
  Require(window >= 1, ErrorCode::kInvalidArgument, "window must be >= 1");
  std::sort(sorted_.begin(), sorted_.end());
}

ConditionalQuantiles EmpiricalQuantileModel::Condition(
    std::span<const double> /*recent*/) const {
  return ConditionalQuantiles(sorted_);
}

namespace {

std::vector<double> QuantileCutPoints(std::span<const double> values, int max_bins) {
  std::vector<double> unique(values.begin(), values.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  std::vector<double> edges;
  if (unique.size() <= 1) return edges;
  const size_t bins = std::min<size_t>(std::max(max_bins, 2), unique.size());
  // Edge i closes bin i: a value v falls in the first bin whose edge is >= v.
  for (size_t i = 1; i < bins; ++i) {
    const size_t pos = (i * unique.size()) / bins - 1;
    if (edges.empty() || unique[pos] > edges.back()) edges.push_back(unique[pos]);
  }
  return edges;
}

class TreeBuilder {
 public:
  TreeBuilder(std::span<const double> scores, std::span<const int> score_bins,
              int window, int num_bins, const QrfConfig& cfg, std::mt19937_64& rng)
      : scores_(scores),
        bins_(score_bins),
        window_(window),
        num_bins_(num_bins),
        cfg_(cfg),
        rng_(rng),
        counts_(num_bins),
        sums_(num_bins) {
    features_.resize(window);
    std::iota(features_.begin(), features_.end(), 0);
    mtry_ = cfg.features_per_split > 0 ? std::min(cfg.features_per_split, window)
                                       : std::max(1, window / 3);
  }

  QuantileForest::Tree Build(std::vector<int> rows) {
    tree_ = {};
    rows_ = std::move(rows);
    Grow(0, static_cast<int>(rows_.size()), 0);
    return std::move(tree_);
  }

 private:
  double Target(int row) const { return scores_[row + window_]; }
  int FeatureBin(int row, int feature) const { return bins_[row + feature]; }

  int Grow(int begin, int end, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const int n = end - begin;

    int best_feature = -1;
    int best_bin = 0;
    if (depth < cfg_.max_depth && n >= 2 * cfg_.min_leaf && num_bins_ > 1) {
      double total = 0.0;
      for (int i = begin; i < end; ++i) total += Target(rows_[i]);
      const double base = total * total / n;
      double best_gain = base + 1e-12 * std::max(1.0, std::abs(base));

      // Partial Fisher-Yates: the first mtry_ entries become this node's lags.
      for (int i = 0; i < mtry_; ++i) {
        std::uniform_int_distribution<int> pick(i, window_ - 1);
        std::swap(features_[i], features_[pick(rng_)]);
      }
      for (int f = 0; f < mtry_; ++f) {
        const int feature = features_[f];
        std::fill(counts_.begin(), counts_.end(), 0);
        std::fill(sums_.begin(), sums_.end(), 0.0);
        for (int i = begin; i < end; ++i) {
          const int b = FeatureBin(rows_[i], feature);
          ++counts_[b];
          sums_[b] += Target(rows_[i]);
        }
        int left_count = 0;
        double left_sum = 0.0;
        for (int b = 0; b + 1 < num_bins_; ++b) {
          left_count += counts_[b];
          left_sum += sums_[b];
          if (left_count < cfg_.min_leaf) continue;
          const int right_count = n - left_count;
          if (right_count < cfg_.min_leaf) break;
          if (counts_[b] == 0) continue;  // same partition as the previous cut
          const double right_sum = total - left_sum;
          const double gain = left_sum * left_sum / left_count +
                              right_sum * right_sum / right_count;
          if (gain > best_gain) {
            best_gain = gain;
            best_feature = feature;
            best_bin = b;
          }
        }
      }
    }

    if (best_feature < 0) {
      auto& node = tree_.nodes[id];
      node.leaf_begin = static_cast<int>(tree_.leaf_values.size());
      for (int i = begin; i < end; ++i) tree_.leaf_values.push_back(Target(rows_[i]));
      node.leaf_end = static_cast<int>(tree_.leaf_values.size());
      return id;
    }

    const auto mid_it = std::stable_partition(
        rows_.begin() + begin, rows_.begin() + end,
        [&](int row) { return FeatureBin(row, best_feature) <= best_bin; });
    const int mid = static_cast<int>(mid_it - rows_.begin());
    const int left = Grow(begin, mid, depth + 1);
    const int right = Grow(mid, end, depth + 1);
    auto& node = tree_.nodes[id];
    node.feature = best_feature;
    node.threshold_bin = best_bin;
    node.left = left;
    node.right = right;
    return id;
  }

  std::span<const double> scores_;
  std::span<const int> bins_;
  int window_;
  int num_bins_;
  const QrfConfig& cfg_;
  std::mt19937_64& rng_;
  std::vector<int> counts_;
  std::vector<double> sums_;
  std::vector<int> features_;
  int mtry_ = 1;
  std::vector<int> rows_;
  QuantileForest::Tree tree_;
};

}  // namespace

int QuantileForest::Bin(double value) const {
  return static_cast<int>(
      std::lower_bound(bin_edges_.begin(), bin_edges_.end(), value) -
      bin_edges_.begin());
}

QuantileForest QuantileForest::Fit(std::span<const double> scores, int window,
                                   const QrfConfig& cfg) {
  Require(window >= 1, ErrorCode::kInvalidArgument, "window must be >= 1");
  Require(cfg.n_trees >= 1, ErrorCode::kInvalidArgument, "n_trees must be >= 1");
  Require(cfg.min_leaf >= 1, ErrorCode::kInvalidArgument, "min_leaf must be >= 1");
  Require(cfg.max_depth >= 0, ErrorCode::kInvalidArgument, "max_depth must be >= 0");
  Require(cfg.subsample_fraction > 0.0 && cfg.subsample_fraction <= 1.0,
          ErrorCode::kInvalidArgument, "subsample_fraction must lie in (0, 1]");
  const int n_scores = static_cast<int>(scores.size());
  Require(n_scores > window + cfg.min_leaf, ErrorCode::kTooFewScores,
          std::to_string(n_scores) + " scores cannot train window " +
              std::to_string(window) + " with min_leaf " +
              std::to_string(cfg.min_leaf));

  QuantileForest forest;
  forest.window_ = window;
  forest.bin_edges_ = QuantileCutPoints(scores, cfg.max_bins);
  const int num_bins = static_cast<int>(forest.bin_edges_.size()) + 1;
  std::vector<int> score_bins(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) score_bins[i] = forest.Bin(scores[i]);

  const int n_rows = n_scores - window;
  const int n_sub = std::max(
      1, static_cast<int>(std::lround(cfg.subsample_fraction * n_rows)));
  std::vector<int> all_rows(n_rows);
  forest.trees_.reserve(cfg.n_trees);
  for (int t = 0; t < cfg.n_trees; ++t) {
    // Per-tree stream: trees can be grown independently and in any order.
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.rng_seed),
                      static_cast<std::uint32_t>(cfg.rng_seed >> 32),
                      static_cast<std::uint32_t>(t)};
    std::mt19937_64 rng(seq);
    std::iota(all_rows.begin(), all_rows.end(), 0);
    if (n_sub < n_rows) {
      for (int i = 0; i < n_sub; ++i) {
        std::uniform_int_distribution<int> pick(i, n_rows - 1);
        std::swap(all_rows[i], all_rows[pick(rng)]);
      }
    }
    std::vector<int> rows(all_rows.begin(), all_rows.begin() + n_sub);
    std::sort(rows.begin(), rows.end());
    TreeBuilder builder(scores, score_bins, window, num_bins, cfg, rng);
    forest.trees_.push_back(builder.Build(std::move(rows)));
  }
  return forest;
}

std::vector<double> QuantileForest::PooledLeafValues(
    std::span<const double> recent) const {
  Require(!trees_.empty(), ErrorCode::kNotFitted, "forest has not been fitted");
  Require(static_cast<int>(recent.size()) == window_, ErrorCode::kWindowMismatch,
          "context has " + std::to_string(recent.size()) + " scores, model window is " +
              std::to_string(window_));
  std::vector<int> context_bins(recent.size());
  for (size_t i = 0; i < recent.size(); ++i) context_bins[i] = Bin(recent[i]);
  std::vector<double> pooled;
  for (const Tree& tree : trees_) {
    const Node* node = &tree.nodes[0];
    while (node->feature >= 0) {
      node = &tree.nodes[context_bins[node->feature] <= node->threshold_bin
                             ? node->left
                             : node->right];
    }
    pooled.insert(pooled.end(), tree.leaf_values.begin() + node->leaf_begin,
                  tree.leaf_values.begin() + node->leaf_end);
  }
  return pooled;
}

ConditionalQuantiles QuantileForest::Condition(std::span<const double> recent) const {
  return ConditionalQuantiles(PooledLeafValues(recent));
}

std::unique_ptr<QuantileModel> FitQuantileModel(const QuantileEngineConfig& cfg,
                                                std::span<const double> scores) {
  switch (cfg.kind) {
    case QuantileKind::kEmpirical:
      return std::make_unique<EmpiricalQuantileModel>(scores, cfg.window);
    case QuantileKind::kQrf:
      return std::make_unique<QuantileForest>(
          QuantileForest::Fit(scores, cfg.window, cfg.qrf));
  }
  Fail(ErrorCode::kInvalidArgument, "unknown quantile kind");
}

}  // namespace ellipsoid_cp
