#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ellipsoid_cp/baselines.h"
#include "ellipsoid_cp/datagen.h"
#include "ellipsoid_cp/metrics.h"
#include "ellipsoid_cp/spci.h"

namespace ellipsoid_cp {

enum class Method { kMultiDimSpci, kCoordwiseSpci, kCopula, kHull };

std::string MethodName(Method method);
std::optional<Method> ParseMethod(const std::string& name);

enum class ProcessKind { kAr, kVar };

struct SimulateSource {
  ProcessKind kind = ProcessKind::kAr;
  int p = 2;
  int order = 5;
  Eigen::Index n = 10000;
  Eigen::Index burn_in = kDefaultBurnIn;
  double spectral_radius_cap = 1.0;
  NoiseKind noise = NoiseKind::kGaussian;
};

struct CsvSource {
  std::filesystem::path path;
  std::vector<std::string> columns;  // empty: every column
};

struct ExperimentConfig {
  std::optional<SimulateSource> simulate;
  std::optional<CsvSource> csv;
  std::vector<Method> methods;
  double alpha = 0.1;
  double train_fraction = 0.85;
  SplitConfig split;  // train_size is derived per series
  SpciConfig spci;    // alpha is copied from `alpha`
  IntervalMode coordwise_mode = IntervalMode::kSigned;
  int trials = 1;
  std::uint64_t seed = 0;
  int rolling_window = 100;
  std::filesystem::path output_dir = "out";
  int threads = 1;
};

inline constexpr int kSummarySchemaVersion = 1;

// Parses and validates a JSON document. Errors carry kConfigError and name
// the offending field path and its line.
ExperimentConfig ParseExperimentConfig(const std::string& json_text);
ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path);
void ValidateExperimentConfig(const ExperimentConfig& cfg);

// The series a trial runs on: simulated with noise seed `seed + trial` (the
// process coefficients come from `seed`), or the CSV file for every trial.
MultiSeries LoadTrialSeries(const ExperimentConfig& cfg, int trial);

struct TrialResult {
  int trial = 0;
  std::uint64_t seed = 0;
  Method method = Method::kMultiDimSpci;
  int p = 0;
  std::vector<RegionReport> reports;
  Evaluation evaluation;
};

struct ExperimentResult {
  // Sorted by (trial, method order in the config).
  std::vector<TrialResult> trials;
  // One record per method, in config order.
  std::vector<SummaryRecord> summary;
};

// Runs one method on a prepared series with the given trial seed.
std::vector<RegionReport> RunMethod(Method method, const PreparedSeries& prepared,
                                    const ExperimentConfig& cfg, std::uint64_t trial_seed);

ExperimentResult RunExperiment(const ExperimentConfig& cfg);

std::string SummaryJson(const ExperimentResult& result);

// Writes summary.json, rolling.csv and regions.csv under `dir`.
void WriteExperimentOutputs(const ExperimentResult& result, const std::filesystem::path& dir);

// Rebuilds the result (without per-step reports) from a regions.csv file.
// `p` of 0 infers the dimension from the largest recorded rank; trial seeds
// are reported as base_seed + trial.
ExperimentResult AggregateRegions(const std::filesystem::path& regions_csv,
                                  int rolling_window, int p = 0,
                                  std::uint64_t base_seed = 0);

}  // namespace ellipsoid_cp
