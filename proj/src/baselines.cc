#include "ellipsoid_cp/baselines.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ellipsoid_cp/error.h"

namespace ellipsoid_cp {

double CorrectedAlpha(double alpha, int p) {
  Require(alpha > 0.0 && alpha < 1.0, ErrorCode::kInvalidArgument,
          "alpha must lie in (0, 1)");
  Require(p >= 1, ErrorCode::kInvalidArgument, "p must be >= 1");
  // -expm1(log1p(-alpha) / p) == 1 - (1 - alpha)^(1/p) without cancellation.
  return -std::expm1(std::log1p(-alpha) / p);
}

bool HyperRectRegion::Contains(const Eigen::VectorXd& y) const {
  Require(y.size() == lower.size(), ErrorCode::kDimensionMismatch,
          "point and box dimensions differ");
  return (y.array() >= lower.array()).all() && (y.array() <= upper.array()).all();
}

IntervalChoice NarrowestInterval(const ConditionalQuantiles& quantiles, double alpha,
                                 int grid_size) {
  Require(grid_size >= 2, ErrorCode::kInvalidArgument, "grid_size must be >= 2");
  IntervalChoice best;
  double best_width = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_size; ++i) {
    const double beta = alpha * static_cast<double>(i) / (grid_size - 1);
    const double lower = quantiles.At(beta);
    const double upper = quantiles.At(std::min(1.0, 1.0 - alpha + beta));
    if (upper - lower < best_width) {
      best_width = upper - lower;
      best = {lower, upper, beta};
    }
  }
  return best;
}

ScalarSpci::ScalarSpci(ScalarSpciConfig config, std::span<const double> warm_residuals)
    : config_(std::move(config)),
      scores_(config_.window_T > 0
                  ? config_.window_T
                  : std::max<int>(1, static_cast<int>(warm_residuals.size()))) {
  Require(config_.alpha > 0.0 && config_.alpha < 1.0, ErrorCode::kInvalidArgument,
          "alpha must lie in (0, 1)");
  const size_t first = warm_residuals.size() > static_cast<size_t>(scores_.capacity())
                           ? warm_residuals.size() - scores_.capacity()
                           : 0;
  for (size_t i = first; i < warm_residuals.size(); ++i) {
    scores_.Push(ToScore(warm_residuals[i]));
  }
}

double ScalarSpci::ToScore(double residual) const {
  return config_.mode == IntervalMode::kAbsolute ? std::abs(residual) : residual;
}

IntervalChoice ScalarSpci::Prepare() {
  Require(scores_.size() == scores_.capacity(), ErrorCode::kNotWarm,
          "score window is not full");
  if (model_ == nullptr || steps_since_refit_ >= config_.quantile.refit_stride) {
    const std::vector<double> values = scores_.Values();
    model_ = FitQuantileModel(config_.quantile, values);
    steps_since_refit_ = 0;
  }
  const ConditionalQuantiles quantiles =
      model_->Condition(scores_.Tail(model_->window()));
  if (config_.mode == IntervalMode::kAbsolute) {
    const double half = quantiles.At(1.0 - config_.alpha);
    return {-half, half, 0.0};
  }
  return NarrowestInterval(quantiles, config_.alpha, config_.beta_grid_size);
}

void ScalarSpci::Commit(double residual) {
  scores_.Push(ToScore(residual));
  ++steps_since_refit_;
}

CoordwiseSpci::CoordwiseSpci(std::shared_ptr<const Forecaster> forecaster,
                             ScalarSpciConfig config,
                             const Eigen::MatrixXd& warm_residuals)
    : forecaster_(std::move(forecaster)),
      coordinate_alpha_(
          CorrectedAlpha(config.alpha, static_cast<int>(warm_residuals.cols()))) {
  Require(forecaster_ != nullptr, ErrorCode::kInvalidArgument, "null forecaster");
  const int p = static_cast<int>(warm_residuals.cols());
  coordinates_.reserve(p);
  for (int j = 0; j < p; ++j) {
    ScalarSpciConfig coord = config;
    coord.alpha = coordinate_alpha_;
    coord.quantile.qrf.rng_seed = config.quantile.qrf.rng_seed + j;
    const Eigen::VectorXd column = warm_residuals.col(j);
    coordinates_.emplace_back(coord, std::span<const double>(column.data(), column.size()));
  }
}

CoordwiseSpci::Prepared CoordwiseSpci::Prepare(const Eigen::VectorXd& x) {
  Prepared out;
  out.prediction = forecaster_->Predict(x);
  const auto p = static_cast<Eigen::Index>(coordinates_.size());
  Require(out.prediction.size() == p, ErrorCode::kDimensionMismatch,
          "forecaster output dimension differs from residual dimension");
  out.box.lower.resize(p);
  out.box.upper.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const IntervalChoice interval = coordinates_[j].Prepare();
    out.box.lower(j) = out.prediction(j) + interval.lower;
    out.box.upper(j) = out.prediction(j) + interval.upper;
    out.mean_beta += interval.beta / static_cast<double>(p);
  }
  return out;
}

RegionReport CoordwiseSpci::Commit(const Prepared& region, const Eigen::VectorXd& y,
                                   std::int64_t step) {
  RegionReport report;
  report.step = step;
  report.contained = region.box.Contains(y);
  report.volume = region.box.Volume();
  report.beta_hat = region.mean_beta;
  report.rank = static_cast<int>(y.size());
  for (size_t j = 0; j < coordinates_.size(); ++j) {
    coordinates_[j].Commit(y(j) - region.prediction(j));
  }
  return report;
}

RegionReport CoordwiseSpci::Step(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                 std::int64_t step) {
  const Prepared region = Prepare(x);
  return Commit(region, y, step);
}

CopulaCalibration EmpiricalCopulaCalibrate(const Eigen::MatrixXd& abs_residuals,
                                           double alpha) {
  Require(alpha > 0.0 && alpha < 1.0, ErrorCode::kInvalidArgument,
          "alpha must lie in (0, 1)");
  const Eigen::Index rows = abs_residuals.rows();
  const Eigen::Index p = abs_residuals.cols();
  Require(rows >= 10, ErrorCode::kTooFewScores,
          "copula calibration needs at least 10 rows, got " + std::to_string(rows));
  std::vector<std::vector<double>> sorted(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    sorted[j].assign(abs_residuals.col(j).data(), abs_residuals.col(j).data() + rows);
    std::sort(sorted[j].begin(), sorted[j].end());
  }
  auto widths_at = [&](double u) {
    Eigen::VectorXd widths(p);
    const size_t rank = OrderStatisticRank(static_cast<size_t>(rows), u);
    for (Eigen::Index j = 0; j < p; ++j) widths(j) = sorted[j][rank - 1];
    return widths;
  };
  auto coverage_at = [&](double u) {
    const Eigen::VectorXd widths = widths_at(u);
    Eigen::Index inside = 0;
    for (Eigen::Index t = 0; t < rows; ++t) {
      if ((abs_residuals.row(t).transpose().array() <= widths.array()).all()) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(rows);
  };

  const double target = 1.0 - alpha;
  CopulaCalibration out;
  if (coverage_at(1.0) < target) {
    out.u = 1.0;
    out.half_widths = widths_at(1.0);
    out.feasible = false;
    return out;
  }
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > kCopulaResolution) {
    const double mid = 0.5 * (lo + hi);
    if (coverage_at(mid) >= target) hi = mid; else lo = mid;
  }
  out.u = hi;
  out.half_widths = widths_at(hi);
  return out;
}

CopulaBaseline::CopulaBaseline(std::shared_ptr<const Forecaster> forecaster,
                               double alpha, const Eigen::MatrixXd& warm_residuals,
                               int window_T)
    : forecaster_(std::move(forecaster)),
      alpha_(alpha),
      buffer_(window_T > 0 ? window_T : std::max<int>(1, warm_residuals.rows()),
              std::max<int>(1, warm_residuals.cols())) {
  Require(forecaster_ != nullptr, ErrorCode::kInvalidArgument, "null forecaster");
  const Eigen::Index first =
      std::max<Eigen::Index>(0, warm_residuals.rows() - buffer_.capacity());
  for (Eigen::Index r = first; r < warm_residuals.rows(); ++r) {
    buffer_.Push(warm_residuals.row(r).transpose());
  }
}

RegionReport CopulaBaseline::Step(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                  std::int64_t step) {
  Require(buffer_.full(), ErrorCode::kNotWarm, "residual window is not full");
  const Eigen::VectorXd prediction = forecaster_->Predict(x);
  last_ = EmpiricalCopulaCalibrate(buffer_.AsMatrix().cwiseAbs(), alpha_);
  HyperRectRegion box{prediction - last_.half_widths, prediction + last_.half_widths};
  RegionReport report;
  report.step = step;
  report.contained = box.Contains(y);
  report.volume = box.Volume();
  report.rank = static_cast<int>(y.size());
  buffer_.Push(y - prediction);
  return report;
}

HullBaseline::HullBaseline(std::shared_ptr<const Forecaster> forecaster,
                           SpciConfig config, const Eigen::MatrixXd& warm_residuals,
                           const Eigen::MatrixXd* warm_features)
    : engine_(std::move(forecaster), std::move(config), warm_residuals, warm_features) {
  Require(warm_residuals.cols() <= kMaxHullDim, ErrorCode::kDimensionTooHigh,
          "hull baseline supports p <= " + std::to_string(kMaxHullDim));
}

RegionReport HullBaseline::Step(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                std::int64_t step, RegionReport* ellipsoid_report) {
  const PreparedRegion region = engine_.Prepare(x);
  const ResidualBuffer& buffer = engine_.buffer();
  const Eigen::VectorXd& mean = region.spec.covariance.mean();
  std::vector<Eigen::VectorXd> offsets;
  offsets.reserve(buffer.size());
  for (int i = 0; i < buffer.size(); ++i) offsets.push_back(buffer[i] - mean);
  const HullRegion hull = HullFromCovered(offsets, region.spec);

  RegionReport report;
  report.step = step;
  report.contained = HullContains(hull, y - region.spec.center);
  report.volume = hull.volume;
  report.beta_hat = region.beta.beta;
  report.inner_sq = region.spec.inner_radius_sq;
  report.outer_sq = region.spec.outer_radius_sq;
  report.rank = region.spec.covariance.rank();
  const RegionReport ellipsoid = engine_.Commit(region, y, step);
  if (ellipsoid_report != nullptr) *ellipsoid_report = ellipsoid;
  return report;
}

}  // namespace ellipsoid_cp
