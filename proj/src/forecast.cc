#include "ellipsoid_cp/forecast.h"

#include <cmath>
#include <string>

#include "ellipsoid_cp/error.h"

namespace ellipsoid_cp {

LagDesign BuildLagFeatures(const MultiSeries& series, const LagFeatureConfig& cfg) {
  Require(cfg.lag_order >= 1, ErrorCode::kInvalidArgument, "lag_order must be >= 1");
  const Eigen::Index n = series.length();
  const Eigen::Index p = series.dim();
  const Eigen::Index w = cfg.lag_order;
  Require(n > w, ErrorCode::kSeriesTooShort,
          "series of length " + std::to_string(n) + " needs more than " +
              std::to_string(w) + " rows for lag order " + std::to_string(w));
  LagDesign design;
  design.lag_order = cfg.lag_order;
  design.features.resize(n - w, cfg.FeatureWidth(static_cast<int>(p)));
  design.targets = series.values.bottomRows(n - w);
  for (Eigen::Index row = 0; row < n - w; ++row) {
    const Eigen::Index t = row + w;
    for (Eigen::Index lag = 1; lag <= w; ++lag) {
      design.features.block(row, (lag - 1) * p, 1, p) = series.values.row(t - lag);
    }
    if (cfg.intercept) design.features(row, w * p) = 1.0;
  }
  return design;
}

LinearForecaster::LinearForecaster(Eigen::MatrixXd weights)
    : weights_(std::move(weights)), fitted_(true) {}

LinearForecaster LinearForecaster::Fit(const Eigen::MatrixXd& features,
                                       const Eigen::MatrixXd& targets,
                                       double ridge) {
  Require(features.rows() == targets.rows(), ErrorCode::kDimensionMismatch,
          "feature rows " + std::to_string(features.rows()) +
              " != target rows " + std::to_string(targets.rows()));
  Require(ridge >= 0.0, ErrorCode::kInvalidArgument, "ridge must be nonnegative");
  Require(features.rows() >= features.cols() || ridge > 0.0,
          ErrorCode::kSingularSystem,
          "fewer rows than columns and no ridge penalty");
  const Eigen::Index d = features.cols();
  Eigen::MatrixXd gram = features.transpose() * features;
  gram.diagonal().array() += ridge;
  const Eigen::MatrixXd rhs = features.transpose() * targets;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const Eigen::VectorXd pivots = ldlt.vectorD();
  const double scale = std::max(1.0, gram.diagonal().cwiseAbs().maxCoeff());
  Require(ldlt.info() == Eigen::Success &&
              pivots.minCoeff() > 1e-13 * scale * static_cast<double>(d),
          ErrorCode::kSingularSystem, "normal equations are singular");
  return LinearForecaster(ldlt.solve(rhs));
}

Eigen::VectorXd LinearForecaster::Predict(const Eigen::VectorXd& feature_row) const {
  Require(fitted_, ErrorCode::kNotFitted, "forecaster has not been fitted");
  Require(feature_row.size() == weights_.rows(), ErrorCode::kDimensionMismatch,
          "feature width " + std::to_string(feature_row.size()) + ", expected " +
              std::to_string(weights_.rows()));
  return weights_.transpose() * feature_row;
}

Eigen::MatrixXd LinearForecaster::PredictRows(const Eigen::MatrixXd& features) const {
  Require(fitted_, ErrorCode::kNotFitted, "forecaster has not been fitted");
  Require(features.cols() == weights_.rows(), ErrorCode::kDimensionMismatch,
          "feature width " + std::to_string(features.cols()) + ", expected " +
              std::to_string(weights_.rows()));
  return features * weights_;
}

HoldoutResult HoldoutResiduals(const LagDesign& design, double split_fraction,
                               double ridge) {
  Require(split_fraction > 0.0 && split_fraction < 1.0,
          ErrorCode::kInvalidArgument, "split_fraction must lie in (0, 1)");
  const Eigen::Index rows = design.rows();
  const auto fit_rows = static_cast<Eigen::Index>(
      std::ceil(split_fraction * static_cast<double>(rows)));
  Require(fit_rows >= 1 && fit_rows < rows, ErrorCode::kSeriesTooShort,
          "cannot split " + std::to_string(rows) + " usable rows at fraction " +
              std::to_string(split_fraction));
  HoldoutResult out;
  out.fit_rows = fit_rows;
  out.first_residual_row = fit_rows;
  out.model = LinearForecaster::Fit(design.features.topRows(fit_rows),
                                    design.targets.topRows(fit_rows), ridge);
  out.features = design.features.bottomRows(rows - fit_rows);
  out.residuals =
      design.targets.bottomRows(rows - fit_rows) - out.model.PredictRows(out.features);
  return out;
}

HoldoutResult HoldoutResiduals(const MultiSeries& series,
                               const LagFeatureConfig& cfg, double split_fraction,
                               double ridge) {
  return HoldoutResiduals(BuildLagFeatures(series, cfg), split_fraction, ridge);
}

}  // namespace ellipsoid_cp
