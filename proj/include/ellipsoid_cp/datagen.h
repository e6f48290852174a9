#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "ellipsoid_cp/series.h"

namespace ellipsoid_cp {

enum class NoiseKind {
  kGaussian,     // N(0, noise_cov)
  kUniformCube,  // iid Unif[-1, 1] per coordinate; noise_cov is ignored
};

inline constexpr double kStationarityMargin = 0.95;
inline constexpr int kDefaultBurnIn = 1000;

// Y_t = sum_l coefficients[l] Y_{t-1-l} + eps_t.
struct VarProcessSpec {
  int dim = 1;
  int order = 1;
  std::vector<Eigen::MatrixXd> coefficients;
  Eigen::MatrixXd noise_cov;
  double spectral_radius_cap = 1.0;
  NoiseKind noise = NoiseKind::kGaussian;
  std::uint64_t seed = 0;  // noise stream
};

// Block companion matrix of the lag polynomial (dim * order square).
Eigen::MatrixXd CompanionMatrix(const VarProcessSpec& spec);
double CompanionSpectralRadius(const VarProcessSpec& spec);

// Scales lag l by c^l so the companion spectral radius becomes `target`.
// A process with radius 0 is left unchanged.
void RescaleSpectralRadius(VarProcessSpec& spec, double target);

// Independent AR(w) coordinates: diagonal lag matrices with Unif[-1, 1]
// entries, rescaled to radius 0.95 * cap; identity noise covariance.
VarProcessSpec MakeArSpec(int p, int w, std::uint64_t seed, double cap = 1.0);

// Dense Unif[-1, 1] lag matrices rescaled as above; noise covariance B B^T with
// B_ij ~ Unif[-1, 1], redrawn until its smallest eigenvalue is >= 1e-8.
VarProcessSpec MakeVarSpec(int p, int w, std::uint64_t seed, double cap = 1.0);

void ValidateProcessSpec(const VarProcessSpec& spec);

// Runs the recursion from a zero state and drops the first burn_in rows.
// Deterministic in spec.seed.
MultiSeries Simulate(const VarProcessSpec& spec, Eigen::Index n,
                     Eigen::Index burn_in = kDefaultBurnIn);

}  // namespace ellipsoid_cp
