#include "ellipsoid_cp/datagen.h"

#include <cmath>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "ellipsoid_cp/error.h"

namespace ellipsoid_cp {
namespace {

constexpr std::uint32_t kCoefficientStream = 0xC0EF;
constexpr std::uint32_t kNoiseStream = 0x401E;
constexpr double kMinNoiseEigenvalue = 1e-8;

std::mt19937_64 MakeEngine(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}

Eigen::MatrixXd UniformMatrix(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) m(i, j) = unif(rng);
  }
  return m;
}

void CheckShape(int p, int w, double cap) {
  Require(p >= 1, ErrorCode::kInvalidArgument, "p must be >= 1");
  Require(w >= 1, ErrorCode::kInvalidArgument, "w must be >= 1");
  Require(cap > 0.0 && cap <= 1.0, ErrorCode::kInvalidArgument,
          "spectral_radius_cap must lie in (0, 1]");
}

}  // namespace

Eigen::MatrixXd CompanionMatrix(const VarProcessSpec& spec) {
  const int p = spec.dim;
  const int w = spec.order;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p * w, p * w);
  for (int l = 0; l < w; ++l) companion.block(0, l * p, p, p) = spec.coefficients[l];
  if (w > 1) companion.block(p, 0, p * (w - 1), p * (w - 1)).setIdentity();
  return companion;
}

double CompanionSpectralRadius(const VarProcessSpec& spec) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(CompanionMatrix(spec), false);
  Require(solver.info() == Eigen::Success, ErrorCode::kSingularSystem,
          "companion eigenvalue computation failed");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

void RescaleSpectralRadius(VarProcessSpec& spec, double target) {
  const double radius = CompanionSpectralRadius(spec);
  if (radius == 0.0) return;
  // Companion roots z of det(z^w I - sum a_l z^{w-l}) scale by c when a_l
  // scales by c^l.
  const double c = target / radius;
  double factor = 1.0;
  for (auto& a : spec.coefficients) {
    factor *= c;
    a *= factor;
  }
}

VarProcessSpec MakeArSpec(int p, int w, std::uint64_t seed, double cap) {
  CheckShape(p, w, cap);
  std::mt19937_64 rng = MakeEngine(seed, kCoefficientStream);
  VarProcessSpec spec;
  spec.dim = p;
  spec.order = w;
  spec.spectral_radius_cap = cap;
  spec.seed = seed;
  for (int l = 0; l < w; ++l) {
    spec.coefficients.push_back(UniformMatrix(p, 1, rng).col(0).asDiagonal());
  }
  spec.noise_cov = Eigen::MatrixXd::Identity(p, p);
  RescaleSpectralRadius(spec, kStationarityMargin * cap);
  return spec;
}

VarProcessSpec MakeVarSpec(int p, int w, std::uint64_t seed, double cap) {
  CheckShape(p, w, cap);
  std::mt19937_64 rng = MakeEngine(seed, kCoefficientStream);
  VarProcessSpec spec;
  spec.dim = p;
  spec.order = w;
  spec.spectral_radius_cap = cap;
  spec.seed = seed;
  for (int l = 0; l < w; ++l) spec.coefficients.push_back(UniformMatrix(p, p, rng));
  RescaleSpectralRadius(spec, kStationarityMargin * cap);
  for (;;) {
    const Eigen::MatrixXd b = UniformMatrix(p, p, rng);
    spec.noise_cov = b * b.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(spec.noise_cov,
                                                          Eigen::EigenvaluesOnly);
    if (solver.eigenvalues().minCoeff() >= kMinNoiseEigenvalue) break;
  }
  return spec;
}

void ValidateProcessSpec(const VarProcessSpec& spec) {
  Require(spec.dim >= 1 && spec.order >= 1, ErrorCode::kInvalidArgument,
          "process dim and order must be >= 1");
  Require(static_cast<int>(spec.coefficients.size()) == spec.order,
          ErrorCode::kDimensionMismatch, "expected one coefficient matrix per lag");
  for (const auto& a : spec.coefficients) {
    Require(a.rows() == spec.dim && a.cols() == spec.dim, ErrorCode::kDimensionMismatch,
            "coefficient matrix must be dim x dim");
  }
  if (spec.noise == NoiseKind::kGaussian) {
    Require(spec.noise_cov.rows() == spec.dim && spec.noise_cov.cols() == spec.dim,
            ErrorCode::kDimensionMismatch, "noise covariance must be dim x dim");
  }
}

MultiSeries Simulate(const VarProcessSpec& spec, Eigen::Index n, Eigen::Index burn_in) {
  ValidateProcessSpec(spec);
  Require(n >= 0, ErrorCode::kInvalidArgument, "n must be >= 0");
  Require(burn_in >= 0, ErrorCode::kInvalidArgument, "burn_in must be >= 0");
  const int p = spec.dim;
  const int w = spec.order;

  Eigen::MatrixXd factor;
  if (spec.noise == NoiseKind::kGaussian) {
    // LDLT tolerates semidefinite covariances where LLT would not.
    Eigen::LDLT<Eigen::MatrixXd> ldlt(spec.noise_cov);
    Require(ldlt.info() == Eigen::Success, ErrorCode::kSingularSystem,
            "noise covariance factorization failed");
    const Eigen::VectorXd d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
    factor = ldlt.transpositionsP().transpose() *
             (Eigen::MatrixXd(ldlt.matrixL()) * d.asDiagonal());
  }

  std::mt19937_64 rng = MakeEngine(spec.seed, kNoiseStream);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::VectorXd z(p);

  MultiSeries out;
  out.values.resize(n, p);
  for (int j = 0; j < p; ++j) out.names.push_back("y" + std::to_string(j));

  // Ring of the last w states; history[0] is Y_{t-1}.
  std::vector<Eigen::VectorXd> history(w, Eigen::VectorXd::Zero(p));
  Eigen::VectorXd y(p);
  const Eigen::Index total = burn_in + n;
  for (Eigen::Index t = 0; t < total; ++t) {
    if (spec.noise == NoiseKind::kGaussian) {
      for (int j = 0; j < p; ++j) z(j) = normal(rng);
      y.noalias() = factor * z;
    } else {
      for (int j = 0; j < p; ++j) y(j) = unif(rng);
    }
    for (int l = 0; l < w; ++l) y.noalias() += spec.coefficients[l] * history[l];
    for (int l = w - 1; l > 0; --l) history[l].swap(history[l - 1]);
    history[0] = y;
    if (t >= burn_in) out.values.row(t - burn_in) = y.transpose();
  }
  return out;
}

}  // namespace ellipsoid_cp
