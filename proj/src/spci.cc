#include "ellipsoid_cp/spci.h"

#include <algorithm>
#include <limits>
#include <string>

#include "ellipsoid_cp/error.h"

namespace ellipsoid_cp {

void ValidateSpciConfig(const SpciConfig& cfg) {
  Require(cfg.alpha > 0.0 && cfg.alpha < 1.0, ErrorCode::kInvalidArgument,
          "alpha must lie in (0, 1)");
  Require(cfg.rho > 0.0, ErrorCode::kInvalidArgument, "rho must be positive");
  Require(cfg.beta_grid_size >= 2, ErrorCode::kInvalidArgument,
          "beta_grid_size must be >= 2");
  Require(cfg.window_T >= 0, ErrorCode::kInvalidArgument, "window_T must be >= 0");
  Require(cfg.covariance_refresh_stride >= 1, ErrorCode::kInvalidArgument,
          "covariance_refresh_stride must be >= 1");
  Require(cfg.quantile.window >= 1, ErrorCode::kInvalidArgument,
          "quantile window must be >= 1");
  Require(cfg.quantile.refit_stride >= 1, ErrorCode::kInvalidArgument,
          "quantile refit_stride must be >= 1");
  if (cfg.covariance_mode == CovarianceMode::kFixed) {
    Require(cfg.fixed_covariance.has_value(), ErrorCode::kInvalidArgument,
            "fixed covariance mode needs a covariance matrix");
  }
}

BetaChoice BetaSearch(const ConditionalQuantiles& quantiles, double alpha,
                      const TruncatedCovariance& tc, int grid_size) {
  Require(alpha > 0.0 && alpha < 1.0, ErrorCode::kInvalidArgument,
          "alpha must lie in (0, 1)");
  Require(grid_size >= 2, ErrorCode::kInvalidArgument, "grid_size must be >= 2");
  BetaChoice best;
  double best_volume = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_size; ++i) {
    const double beta = alpha * static_cast<double>(i) / (grid_size - 1);
    const double inner = i == 0 ? 0.0 : std::max(0.0, quantiles.At(beta));
    const double outer =
        std::max(inner, quantiles.At(std::min(1.0, 1.0 - alpha + beta)));
    const double volume = ShellVolume(tc, inner, outer);
    if (volume < best_volume) {
      best_volume = volume;
      best = {beta, inner, outer, volume};
    }
  }
  return best;
}

BetaChoice BetaSearch(const QuantileModel& model, std::span<const double> context,
                      double alpha, const TruncatedCovariance& tc, int grid_size) {
  return BetaSearch(model.Condition(context), alpha, tc, grid_size);
}

SpciEngine::SpciEngine(std::shared_ptr<const Forecaster> forecaster,
                       SpciConfig config, const Eigen::MatrixXd& warm_residuals,
                       const Eigen::MatrixXd* warm_features)
    : forecaster_(std::move(forecaster)),
      config_(std::move(config)),
      buffer_(config_.window_T > 0 ? config_.window_T
                                   : std::max<int>(1, warm_residuals.rows()),
              std::max<int>(1, warm_residuals.cols())),
      scores_(buffer_.capacity()) {
  ValidateSpciConfig(config_);
  Require(forecaster_ != nullptr, ErrorCode::kInvalidArgument, "null forecaster");
  const bool local = config_.covariance_mode == CovarianceMode::kLocal;
  if (local) {
    Require(warm_features != nullptr && warm_features->rows() == warm_residuals.rows(),
            ErrorCode::kMisalignedHistory,
            "local covariance needs one feature row per warm residual");
  }
  const Eigen::Index first =
      std::max<Eigen::Index>(0, warm_residuals.rows() - buffer_.capacity());
  for (Eigen::Index r = first; r < warm_residuals.rows(); ++r) {
    buffer_.Push(warm_residuals.row(r).transpose());
    if (local) features_.push_back(warm_features->row(r).transpose());
  }
  if (config_.covariance_mode == CovarianceMode::kFixed) {
    const Eigen::MatrixXd& sigma = *config_.fixed_covariance;
    Require(sigma.rows() == buffer_.dim() && sigma.cols() == buffer_.dim(),
            ErrorCode::kDimensionMismatch, "fixed covariance has the wrong shape");
    const Eigen::VectorXd mean =
        config_.fixed_mean.value_or(Eigen::VectorXd::Zero(buffer_.dim()));
    tc_ = TruncateOrDegenerate(sigma, mean, config_.rho);
    if (!buffer_.empty()) scores_ = RescoreWindow(buffer_, tc_);
  } else if (buffer_.size() >= 2) {
    RefreshGlobal();
  }
}

void SpciEngine::RefreshGlobal() {
  global_ = EstimateCovariance(buffer_.AsMatrix());
  tc_ = TruncateOrDegenerate(global_.matrix, global_.mean, config_.rho);
  scores_ = RescoreWindow(buffer_, tc_);
  pushes_since_refresh_ = 0;
}

PreparedRegion SpciEngine::Prepare(const Eigen::VectorXd& x) {
  Require(buffer_.full() && buffer_.size() >= 2, ErrorCode::kNotWarm,
          "residual window holds " + std::to_string(buffer_.size()) + " of " +
              std::to_string(buffer_.capacity()) + " entries");
  PreparedRegion out;
  out.feature = x;
  out.prediction = forecaster_->Predict(x);
  Require(out.prediction.size() == buffer_.dim(), ErrorCode::kDimensionMismatch,
          "forecaster output dimension differs from residual dimension");

  const ScoreSeries* scores = &scores_;
  TruncatedCovariance tc = tc_;
  ScoreSeries local_scores(buffer_.capacity());
  if (config_.covariance_mode == CovarianceMode::kLocal) {
    const std::vector<Eigen::VectorXd> history(features_.begin(), features_.end());
    const CovarianceEstimate blended =
        LocalCovariance(buffer_, x, history, config_.local, global_);
    tc = TruncateOrDegenerate(blended.matrix, blended.mean, config_.rho);
    local_scores = RescoreWindow(buffer_, tc);
    scores = &local_scores;
  }

  if (model_ == nullptr || steps_since_refit_ >= config_.quantile.refit_stride) {
    const std::vector<double> values = scores->Values();
    model_ = FitQuantileModel(config_.quantile, values);
    steps_since_refit_ = 0;
  }
  const std::vector<double> context = scores->Tail(model_->window());
  const ConditionalQuantiles quantiles = model_->Condition(context);
  if (config_.search_beta) {
    out.beta = BetaSearch(quantiles, config_.alpha, tc, config_.beta_grid_size);
  } else {
    const double outer = std::max(0.0, quantiles.At(1.0 - config_.alpha));
    out.beta = {0.0, 0.0, outer, ShellVolume(tc, 0.0, outer)};
  }
  out.spec.center = out.prediction + tc.mean();
  out.spec.covariance = std::move(tc);
  out.spec.inner_radius_sq = out.beta.inner_sq;
  out.spec.outer_radius_sq = out.beta.outer_sq;
  return out;
}

RegionReport SpciEngine::Commit(const PreparedRegion& region, const Eigen::VectorXd& y,
                                std::int64_t step) {
  RegionReport report;
  report.step = step;
  report.contained = Contains(region.spec, y);
  report.inner_sq = region.spec.inner_radius_sq;
  report.outer_sq = region.spec.outer_radius_sq;
  report.volume = ShellVolume(region.spec.covariance, report.inner_sq, report.outer_sq);
  report.beta_hat = region.beta.beta;
  report.rank = region.spec.covariance.rank();

  const Eigen::VectorXd residual = y - region.prediction;
  buffer_.Push(residual);
  if (config_.covariance_mode == CovarianceMode::kLocal) {
    if (static_cast<int>(features_.size()) == buffer_.capacity()) features_.pop_front();
    features_.push_back(region.feature);
  }
  if (config_.covariance_mode == CovarianceMode::kFixed) {
    scores_.Push(Score(residual, tc_));
  } else if (++pushes_since_refresh_ >= config_.covariance_refresh_stride) {
    RefreshGlobal();
  } else {
    scores_.Push(Score(residual, tc_));
  }
  ++steps_since_refit_;
  return report;
}

RegionReport SpciEngine::Step(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                              std::int64_t step) {
  const PreparedRegion region = Prepare(x);
  return Commit(region, y, step);
}

PreparedSeries PrepareSeries(const MultiSeries& series, const SplitConfig& split) {
  const Eigen::Index w = split.lags.lag_order;
  Require(split.train_size <= series.length(), ErrorCode::kInvalidArgument,
          "train_size exceeds series length");
  Require(split.train_size > w + 2, ErrorCode::kSeriesTooShort,
          "training segment of " + std::to_string(split.train_size) +
              " rows is too short for lag order " + std::to_string(w));
  PreparedSeries out;
  out.design = BuildLagFeatures(series, split.lags);
  const Eigen::Index train_rows = split.train_size - w;
  LagDesign train;
  train.lag_order = out.design.lag_order;
  train.features = out.design.features.topRows(train_rows);
  train.targets = out.design.targets.topRows(train_rows);
  HoldoutResult holdout = HoldoutResiduals(train, split.fit_fraction, split.ridge);
  out.forecaster = std::make_shared<const LinearForecaster>(std::move(holdout.model));
  out.calibration_residuals = std::move(holdout.residuals);
  out.calibration_features = std::move(holdout.features);
  out.test_begin = train_rows;
  return out;
}

std::vector<RegionReport> RunSpci(const PreparedSeries& prepared,
                                  const SpciConfig& config) {
  std::vector<RegionReport> reports;
  if (prepared.test_count() == 0) return reports;
  SpciEngine engine(prepared.forecaster, config, prepared.calibration_residuals,
                    &prepared.calibration_features);
  reports.reserve(prepared.test_count());
  for (Eigen::Index r = prepared.test_begin; r < prepared.design.rows(); ++r) {
    reports.push_back(engine.Step(prepared.design.features.row(r).transpose(),
                                  prepared.design.targets.row(r).transpose(),
                                  prepared.design.TargetIndex(r)));
  }
  return reports;
}

std::vector<RegionReport> RunSpci(const MultiSeries& series, const SplitConfig& split,
                                  const SpciConfig& config) {
  return RunSpci(PrepareSeries(series, split), config);
}

}  // namespace ellipsoid_cp
