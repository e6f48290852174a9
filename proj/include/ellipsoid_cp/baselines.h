#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ellipsoid_cp/forecast.h"
#include "ellipsoid_cp/hull.h"
#include "ellipsoid_cp/nonconformity.h"
#include "ellipsoid_cp/quantile.h"
#include "ellipsoid_cp/spci.h"

namespace ellipsoid_cp {

// Per-coordinate level whose p-fold product of coverages equals 1 - alpha.
double CorrectedAlpha(double alpha, int p);

struct HyperRectRegion {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  double Volume() const { return (upper - lower).prod(); }
  bool Contains(const Eigen::VectorXd& y) const;
};

enum class IntervalMode {
  kSigned,    // quantiles of signed residuals, width-minimizing beta search
  kAbsolute,  // symmetric: prediction +/- Q(1 - alpha) of |residual|
};

struct ScalarSpciConfig {
  double alpha = 0.1;
  int beta_grid_size = 21;
  IntervalMode mode = IntervalMode::kSigned;
  QuantileEngineConfig quantile;
  int window_T = 0;
};

// Offsets [lower, upper] to add to the point prediction.
struct IntervalChoice {
  double lower = 0.0;
  double upper = 0.0;
  double beta = 0.0;
};

// Width-minimizing interval [Q(beta), Q(1 - alpha + beta)] over the beta grid
// {0, alpha/(g-1), ..., alpha}; ties go to the smaller beta.
IntervalChoice NarrowestInterval(const ConditionalQuantiles& quantiles, double alpha,
                                 int grid_size);

// Univariate SPCI on one residual stream.
class ScalarSpci {
 public:
  ScalarSpci(ScalarSpciConfig config, std::span<const double> warm_residuals);

  IntervalChoice Prepare();
  void Commit(double residual);

  const ScoreSeries& scores() const { return scores_; }

 private:
  double ToScore(double residual) const;

  ScalarSpciConfig config_;
  ScoreSeries scores_;
  std::unique_ptr<QuantileModel> model_;
  int steps_since_refit_ = 0;
};

// SPCI run independently on each coordinate at the corrected level; the
// region is the product of the intervals.
class CoordwiseSpci {
 public:
  // `config.alpha` is the joint level; each coordinate runs at
  // CorrectedAlpha(alpha, p). Coordinate j seeds its forest with
  // rng_seed + j.
  CoordwiseSpci(std::shared_ptr<const Forecaster> forecaster, ScalarSpciConfig config,
                const Eigen::MatrixXd& warm_residuals);

  struct Prepared {
    Eigen::VectorXd prediction;
    HyperRectRegion box;
    double mean_beta = 0.0;
  };

  Prepared Prepare(const Eigen::VectorXd& x);
  RegionReport Commit(const Prepared& region, const Eigen::VectorXd& y,
                      std::int64_t step);
  RegionReport Step(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                    std::int64_t step);

  double coordinate_alpha() const { return coordinate_alpha_; }

 private:
  std::shared_ptr<const Forecaster> forecaster_;
  double coordinate_alpha_;
  std::vector<ScalarSpci> coordinates_;
};

struct CopulaCalibration {
  double u = 1.0;
  Eigen::VectorXd half_widths;
  bool feasible = true;
};

inline constexpr double kCopulaResolution = 1e-4;

// Smallest common marginal level u (to kCopulaResolution) at which the
// fraction of rows with |e_tj| <= F_j^{-1}(u) for every j reaches 1 - alpha.
// `abs_residuals` is T x p with T >= 10.
CopulaCalibration EmpiricalCopulaCalibrate(const Eigen::MatrixXd& abs_residuals,
                                           double alpha);

// Hyper-rectangles from the empirical copula over a sliding residual window.
class CopulaBaseline {
 public:
  CopulaBaseline(std::shared_ptr<const Forecaster> forecaster, double alpha,
                 const Eigen::MatrixXd& warm_residuals, int window_T = 0);

  RegionReport Step(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                    std::int64_t step);
  const CopulaCalibration& last_calibration() const { return last_; }

 private:
  std::shared_ptr<const Forecaster> forecaster_;
  double alpha_;
  ResidualBuffer buffer_;
  CopulaCalibration last_;
};

// Convex hull of the calibration residuals that the MultiDimSPCI region
// covers, rebuilt every step and placed at the region center.
class HullBaseline {
 public:
  HullBaseline(std::shared_ptr<const Forecaster> forecaster, SpciConfig config,
               const Eigen::MatrixXd& warm_residuals,
               const Eigen::MatrixXd* warm_features = nullptr);

  // Returns the hull report; `ellipsoid_report`, when given, receives the
  // report of the underlying ellipsoid region for the same step.
  RegionReport Step(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                    std::int64_t step, RegionReport* ellipsoid_report = nullptr);

 private:
  SpciEngine engine_;
};

}  // namespace ellipsoid_cp
