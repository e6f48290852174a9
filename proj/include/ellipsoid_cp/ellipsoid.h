#pragma once

#include <span>

#include <Eigen/Dense>

namespace ellipsoid_cp {

// Threshold below which covariance eigen-directions are discarded.
inline constexpr double kDefaultRho = 1e-3;

// Sample covariance of a set of vector residuals, normalized by (T - 1).
struct CovarianceEstimate {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd mean;
  int sample_count = 0;

  int dim() const { return static_cast<int>(mean.size()); }
};

// Estimates the covariance about the sample mean. `residuals` holds one
// residual per row (T x p).
CovarianceEstimate EstimateCovariance(const Eigen::MatrixXd& residuals);
CovarianceEstimate EstimateCovariance(std::span<const Eigen::VectorXd> residuals);

// Rank-k truncation of a symmetric PSD matrix: the eigenpairs whose eigenvalue
// is at least `threshold`, in descending order.
class TruncatedCovariance {
 public:
  TruncatedCovariance() = default;
  TruncatedCovariance(Eigen::VectorXd eigenvalues, Eigen::MatrixXd basis,
                      double threshold, Eigen::VectorXd mean);

  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& basis() const { return basis_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  double threshold() const { return threshold_; }
  int rank() const { return static_cast<int>(eigenvalues_.size()); }
  int dim() const { return static_cast<int>(basis_.rows()); }

  // basis * diag(eigenvalues) * basis^T.
  Eigen::MatrixXd Reconstruct() const;
  // basis * diag(1 / eigenvalues) * basis^T. Only used by diagnostics and
  // tests; scoring goes through the factored form.
  Eigen::MatrixXd PseudoInverse() const;

  // Coordinates of (v - mean) in the retained eigenbasis, each divided by
  // sqrt(lambda_i).
  Eigen::VectorXd Whiten(const Eigen::VectorXd& v) const;

 private:
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd basis_;
  double threshold_ = kDefaultRho;
  Eigen::VectorXd mean_;
};

// Throws kAllEigenvaluesBelowThreshold when nothing survives `rho`.
TruncatedCovariance Truncate(const CovarianceEstimate& cov, double rho);
TruncatedCovariance Truncate(const Eigen::MatrixXd& symmetric,
                             const Eigen::VectorXd& mean, double rho);

// Rank-0 stand-in used when every eigenvalue falls below rho: its
// pseudo-inverse is zero, so every score is 0 and every volume is 0.
TruncatedCovariance DegenerateCovariance(const Eigen::VectorXd& mean, double rho);
// Truncate(), falling back to DegenerateCovariance() instead of throwing.
TruncatedCovariance TruncateOrDegenerate(const Eigen::MatrixXd& symmetric,
                                         const Eigen::VectorXd& mean, double rho);

// (v - mean)^T Sigma_rho^+ (v - mean), evaluated in the retained eigenbasis.
double PseudoInverseQuadForm(const TruncatedCovariance& tc,
                             const Eigen::VectorXd& v);

// Volume of {x : x^T Sigma_rho^+ x <= radius_sq} measured inside the k-dim
// retained subspace: c_k * radius_sq^(k/2) * sqrt(prod lambda_i).
double EllipsoidVolume(const TruncatedCovariance& tc, double radius_sq);

// Volume between two concentric ellipsoids; throws kInvertedRadii if
// inner_sq > outer_sq.
double ShellVolume(const TruncatedCovariance& tc, double inner_sq,
                   double outer_sq);

// A prediction region: the closed shell
//   { y : inner_radius_sq <= score(y - center + mean) <= outer_radius_sq }.
// With inner_radius_sq == 0 this is a plain ellipsoid.
struct EllipsoidSpec {
  Eigen::VectorXd center;
  TruncatedCovariance covariance;
  double inner_radius_sq = 0.0;
  double outer_radius_sq = 0.0;

  double Volume() const {
    return ShellVolume(covariance, inner_radius_sq, outer_radius_sq);
  }
};

double RegionScore(const EllipsoidSpec& spec, const Eigen::VectorXd& y);
bool Contains(const EllipsoidSpec& spec, const Eigen::VectorXd& y);

}  // namespace ellipsoid_cp
