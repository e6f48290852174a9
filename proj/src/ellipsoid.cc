#include "ellipsoid_cp/ellipsoid.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ellipsoid_cp/error.h"

namespace ellipsoid_cp {

CovarianceEstimate EstimateCovariance(const Eigen::MatrixXd& residuals) {
  const Eigen::Index count = residuals.rows();
  Require(count >= 2, ErrorCode::kFewerThanTwoSamples,
          "covariance needs at least 2 residuals, got " + std::to_string(count));
  Require(residuals.cols() >= 1, ErrorCode::kDimensionMismatch,
          "residual dimension must be at least 1");
  CovarianceEstimate out;
  out.mean = residuals.colwise().mean().transpose();
  const Eigen::MatrixXd centered = residuals.rowwise() - out.mean.transpose();
  out.matrix = (centered.transpose() * centered) / static_cast<double>(count - 1);
  // Symmetrize away round-off from the product.
  out.matrix = 0.5 * (out.matrix + out.matrix.transpose()).eval();
  out.sample_count = static_cast<int>(count);
  return out;
}

CovarianceEstimate EstimateCovariance(std::span<const Eigen::VectorXd> residuals) {
  Require(residuals.size() >= 2, ErrorCode::kFewerThanTwoSamples,
          "covariance needs at least 2 residuals, got " +
              std::to_string(residuals.size()));
  const Eigen::Index p = residuals.front().size();
  Eigen::MatrixXd stacked(static_cast<Eigen::Index>(residuals.size()), p);
  for (size_t i = 0; i < residuals.size(); ++i) {
    Require(residuals[i].size() == p, ErrorCode::kDimensionMismatch,
            "residual " + std::to_string(i) + " has dimension " +
                std::to_string(residuals[i].size()) + ", expected " +
                std::to_string(p));
    stacked.row(static_cast<Eigen::Index>(i)) = residuals[i].transpose();
  }
  return EstimateCovariance(stacked);
}

TruncatedCovariance::TruncatedCovariance(Eigen::VectorXd eigenvalues,
                                         Eigen::MatrixXd basis, double threshold,
                                         Eigen::VectorXd mean)
    : eigenvalues_(std::move(eigenvalues)),
      basis_(std::move(basis)),
      threshold_(threshold),
      mean_(std::move(mean)) {}

Eigen::MatrixXd TruncatedCovariance::Reconstruct() const {
  return basis_ * eigenvalues_.asDiagonal() * basis_.transpose();
}

Eigen::MatrixXd TruncatedCovariance::PseudoInverse() const {
  return basis_ * eigenvalues_.cwiseInverse().asDiagonal() * basis_.transpose();
}

Eigen::VectorXd TruncatedCovariance::Whiten(const Eigen::VectorXd& v) const {
  Require(v.size() == dim(), ErrorCode::kDimensionMismatch,
          "vector has dimension " + std::to_string(v.size()) + ", expected " +
              std::to_string(dim()));
  const Eigen::VectorXd projected = basis_.transpose() * (v - mean_);
  return projected.cwiseQuotient(eigenvalues_.cwiseSqrt());
}

TruncatedCovariance Truncate(const Eigen::MatrixXd& symmetric,
                             const Eigen::VectorXd& mean, double rho) {
  Require(rho > 0.0, ErrorCode::kInvalidArgument, "rho must be positive");
  Require(symmetric.rows() == symmetric.cols() && symmetric.rows() == mean.size(),
          ErrorCode::kDimensionMismatch, "covariance and mean sizes disagree");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric);
  Require(solver.info() == Eigen::Success, ErrorCode::kInvalidArgument,
          "eigendecomposition failed");
  // Eigen returns ascending eigenvalues; walk from the top.
  const Eigen::VectorXd& values = solver.eigenvalues();
  const Eigen::Index p = values.size();
  Eigen::Index kept = 0;
  for (Eigen::Index i = p - 1; i >= 0; --i) {
    if (std::max(values(i), 0.0) >= rho) ++kept; else break;
  }
  Require(kept > 0, ErrorCode::kAllEigenvaluesBelowThreshold,
          "largest eigenvalue " + std::to_string(values(p - 1)) +
              " is below rho " + std::to_string(rho));
  Eigen::VectorXd eigenvalues(kept);
  Eigen::MatrixXd basis(p, kept);
  for (Eigen::Index j = 0; j < kept; ++j) {
    eigenvalues(j) = values(p - 1 - j);
    basis.col(j) = solver.eigenvectors().col(p - 1 - j);
  }
  return TruncatedCovariance(std::move(eigenvalues), std::move(basis), rho, mean);
}

TruncatedCovariance DegenerateCovariance(const Eigen::VectorXd& mean, double rho) {
  return TruncatedCovariance(Eigen::VectorXd(0), Eigen::MatrixXd(mean.size(), 0),
                             rho, mean);
}

TruncatedCovariance TruncateOrDegenerate(const Eigen::MatrixXd& symmetric,
                                         const Eigen::VectorXd& mean, double rho) {
  try {
    return Truncate(symmetric, mean, rho);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kAllEigenvaluesBelowThreshold) throw;
    return DegenerateCovariance(mean, rho);
  }
}

TruncatedCovariance Truncate(const CovarianceEstimate& cov, double rho) {
  return Truncate(cov.matrix, cov.mean, rho);
}

double PseudoInverseQuadForm(const TruncatedCovariance& tc,
                             const Eigen::VectorXd& v) {
  return tc.Whiten(v).squaredNorm();
}

double EllipsoidVolume(const TruncatedCovariance& tc, double radius_sq) {
  Require(radius_sq >= 0.0, ErrorCode::kInvalidArgument,
          "radius_sq must be nonnegative");
  // A rank-0 truncation has no retained subspace to measure.
  if (radius_sq == 0.0 || tc.rank() == 0) return 0.0;
  const double k = tc.rank();
  const double log_unit_ball =
      0.5 * k * std::log(std::numbers::pi) - std::lgamma(0.5 * k + 1.0);
  const double log_det = tc.eigenvalues().array().log().sum();
  return std::exp(log_unit_ball + 0.5 * k * std::log(radius_sq) + 0.5 * log_det);
}

double ShellVolume(const TruncatedCovariance& tc, double inner_sq,
                   double outer_sq) {
  Require(inner_sq >= 0.0, ErrorCode::kInvalidArgument,
          "inner_sq must be nonnegative");
  Require(inner_sq <= outer_sq, ErrorCode::kInvertedRadii,
          "inner_sq " + std::to_string(inner_sq) + " exceeds outer_sq " +
              std::to_string(outer_sq));
  if (inner_sq == outer_sq) return 0.0;
  return EllipsoidVolume(tc, outer_sq) - EllipsoidVolume(tc, inner_sq);
}

double RegionScore(const EllipsoidSpec& spec, const Eigen::VectorXd& y) {
  Require(y.size() == spec.center.size(), ErrorCode::kDimensionMismatch,
          "point has dimension " + std::to_string(y.size()) + ", expected " +
              std::to_string(spec.center.size()));
  return PseudoInverseQuadForm(spec.covariance,
                               y - spec.center + spec.covariance.mean());
}

bool Contains(const EllipsoidSpec& spec, const Eigen::VectorXd& y) {
  const double score = RegionScore(spec, y);
  return spec.inner_radius_sq <= score && score <= spec.outer_radius_sq;
}

}  // namespace ellipsoid_cp
