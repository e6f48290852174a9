#pragma once

#include <Eigen/Dense>

#include "ellipsoid_cp/series.h"

namespace ellipsoid_cp {

struct LagFeatureConfig {
  int lag_order = 20;
  bool intercept = true;

  // Width of one feature row for a p-dimensional series.
  int FeatureWidth(int p) const { return p * lag_order + (intercept ? 1 : 0); }
};

// Lagged design matrix. Row i predicts series row i + lag_order from
// Y_{t-1}, ..., Y_{t-w} (most recent lag first, each lag contributing p
// consecutive columns), followed by a trailing 1 when an intercept is used.
struct LagDesign {
  Eigen::MatrixXd features;
  Eigen::MatrixXd targets;
  int lag_order = 0;

  Eigen::Index rows() const { return features.rows(); }
  // Index in the source series of the target of design row `row`.
  Eigen::Index TargetIndex(Eigen::Index row) const { return row + lag_order; }
};

LagDesign BuildLagFeatures(const MultiSeries& series, const LagFeatureConfig& cfg);

// Point predictor f(X_t) -> Y_t. Implementations are immutable once built.
class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual Eigen::VectorXd Predict(const Eigen::VectorXd& feature_row) const = 0;
};

class LinearForecaster : public Forecaster {
 public:
  LinearForecaster() = default;
  explicit LinearForecaster(Eigen::MatrixXd weights);

  // Minimizes ||X W - Y||^2 + ridge ||W||^2 through the normal equations.
  static LinearForecaster Fit(const Eigen::MatrixXd& features,
                              const Eigen::MatrixXd& targets, double ridge);

  Eigen::VectorXd Predict(const Eigen::VectorXd& feature_row) const override;
  Eigen::MatrixXd PredictRows(const Eigen::MatrixXd& features) const;

  bool fitted() const { return fitted_; }
  const Eigen::MatrixXd& weights() const { return weights_; }

 private:
  Eigen::MatrixXd weights_;
  bool fitted_ = false;
};

inline constexpr double kDefaultRidge = 1e-6;
inline constexpr double kDefaultFitFraction = 0.5;

// Fit on the leading part of a design, residuals on the rest.
struct HoldoutResult {
  LinearForecaster model;
  Eigen::Index fit_rows = 0;          // design rows [0, fit_rows) used to fit
  Eigen::MatrixXd residuals;          // one residual per remaining row, in time order
  Eigen::MatrixXd features;           // features aligned with `residuals`
  Eigen::Index first_residual_row = 0;
};

HoldoutResult HoldoutResiduals(const LagDesign& design, double split_fraction,
                               double ridge = kDefaultRidge);
HoldoutResult HoldoutResiduals(const MultiSeries& series,
                               const LagFeatureConfig& cfg, double split_fraction,
                               double ridge = kDefaultRidge);

}  // namespace ellipsoid_cp
