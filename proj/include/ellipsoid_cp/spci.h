#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ellipsoid_cp/ellipsoid.h"
#include "ellipsoid_cp/forecast.h"
#include "ellipsoid_cp/nonconformity.h"
#include "ellipsoid_cp/quantile.h"
#include "ellipsoid_cp/series.h"

namespace ellipsoid_cp {

enum class CovarianceMode {
  kGlobal,  // sample covariance of the residual window
  kLocal,   // kNN blend with the global estimate
  kFixed,   // a known covariance supplied by the caller
};

struct SpciConfig {
  double alpha = 0.1;
  double rho = kDefaultRho;
  int beta_grid_size = 21;
  // When false the grid collapses to {0}: the region is the plain ellipsoid
  // {score <= Q(1 - alpha)}.
  bool search_beta = true;
  CovarianceMode covariance_mode = CovarianceMode::kGlobal;
  LocalCovConfig local;
  // Used by kFixed. The mean defaults to zero.
  std::optional<Eigen::MatrixXd> fixed_covariance;
  std::optional<Eigen::VectorXd> fixed_mean;
  QuantileEngineConfig quantile;
  // Residual window size T; 0 keeps every warm-up residual.
  int window_T = 0;
  // Recompute the global covariance every this many pushes.
  int covariance_refresh_stride = 1;
};

void ValidateSpciConfig(const SpciConfig& cfg);

struct RegionReport {
  std::int64_t step = 0;
  bool contained = false;
  double volume = 0.0;
  double beta_hat = 0.0;
  double inner_sq = 0.0;
  double outer_sq = 0.0;
  int rank = 0;
};

struct BetaChoice {
  double beta = 0.0;
  double inner_sq = 0.0;
  double outer_sq = 0.0;
  double volume = 0.0;
};

// Grid search for the beta minimizing the shell volume between the
// Q(beta) and Q(1 - alpha + beta) ellipsoids, over {0, alpha/(g-1), ..., alpha}.
// beta = 0 leaves no inner ellipsoid. Ties resolve to the smaller beta.
BetaChoice BetaSearch(const ConditionalQuantiles& quantiles, double alpha,
                      const TruncatedCovariance& tc, int grid_size);
BetaChoice BetaSearch(const QuantileModel& model, std::span<const double> context,
                      double alpha, const TruncatedCovariance& tc, int grid_size);

// The region for one test step before its response is revealed.
struct PreparedRegion {
  Eigen::VectorXd feature;
  Eigen::VectorXd prediction;
  EllipsoidSpec spec;
  BetaChoice beta;
};

// Sequential multivariate SPCI. The engine owns the residual window and score
// series; every step builds a region from the current state, checks the
// response, then slides the window forward.
class SpciEngine {
 public:
  // `warm_residuals` (one per row, oldest first) seed the window; only the
  // last window_T are kept. `warm_features` is required in kLocal mode and
  // must align row by row with `warm_residuals`.
  SpciEngine(std::shared_ptr<const Forecaster> forecaster, SpciConfig config,
             const Eigen::MatrixXd& warm_residuals,
             const Eigen::MatrixXd* warm_features = nullptr);

  PreparedRegion Prepare(const Eigen::VectorXd& x);
  RegionReport Commit(const PreparedRegion& region, const Eigen::VectorXd& y,
                      std::int64_t step);
  RegionReport Step(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                    std::int64_t step);

  const ResidualBuffer& buffer() const { return buffer_; }
  const ScoreSeries& scores() const { return scores_; }
  const TruncatedCovariance& covariance() const { return tc_; }
  const SpciConfig& config() const { return config_; }
  int window_T() const { return buffer_.capacity(); }

 private:
  void RefreshGlobal();

  std::shared_ptr<const Forecaster> forecaster_;
  SpciConfig config_;
  ResidualBuffer buffer_;
  std::deque<Eigen::VectorXd> features_;
  ScoreSeries scores_;
  CovarianceEstimate global_;
  TruncatedCovariance tc_;
  std::unique_ptr<QuantileModel> model_;
  int steps_since_refit_ = 0;
  int pushes_since_refresh_ = 0;
};

// How a series is cut into forecaster-fit, calibration and test parts.
struct SplitConfig {
  LagFeatureConfig lags;
  double ridge = kDefaultRidge;
  double fit_fraction = kDefaultFitFraction;
  // Series rows [0, train_size) are training data; later rows are test targets.
  Eigen::Index train_size = 0;
};

// A series after fitting the point predictor on the leading training rows.
struct PreparedSeries {
  LagDesign design;
  std::shared_ptr<const LinearForecaster> forecaster;
  Eigen::MatrixXd calibration_residuals;
  Eigen::MatrixXd calibration_features;
  Eigen::Index test_begin = 0;  // first design row whose target is a test point

  Eigen::Index test_count() const { return design.rows() - test_begin; }
};

PreparedSeries PrepareSeries(const MultiSeries& series, const SplitConfig& split);

// Runs the engine over every test row. Reports are in time order; `step` is
// the series index of the predicted row.
std::vector<RegionReport> RunSpci(const PreparedSeries& prepared,
                                  const SpciConfig& config);
std::vector<RegionReport> RunSpci(const MultiSeries& series, const SplitConfig& split,
                                  const SpciConfig& config);

}  // namespace ellipsoid_cp
