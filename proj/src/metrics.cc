#include "ellipsoid_cp/metrics.h"

#include <cmath>

#include "ellipsoid_cp/error.h"

namespace ellipsoid_cp {
namespace {

void MeanStd(const std::vector<double>& xs, double& mean, double& stddev) {
  mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  stddev = 0.0;
  if (xs.size() < 2) return;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

Evaluation Evaluate(std::span<const RegionReport> reports, int rolling_window) {
  Require(!reports.empty(), ErrorCode::kEmptyReports, "no region reports to evaluate");
  Require(rolling_window >= 1, ErrorCode::kInvalidArgument,
          "rolling_window must be >= 1");
  Evaluation out;
  out.steps = static_cast<std::int64_t>(reports.size());
  std::int64_t hits = 0;
  double volume = 0.0;
  // Integer hit counts keep rolling coverage exact; volumes are re-summed
  // per window to avoid drift from subtract-and-add.
  std::int64_t window_hits = 0;
  for (size_t i = 0; i < reports.size(); ++i) {
    hits += reports[i].contained ? 1 : 0;
    volume += reports[i].volume;
    window_hits += reports[i].contained ? 1 : 0;
    if (i >= static_cast<size_t>(rolling_window)) {
      window_hits -= reports[i - rolling_window].contained ? 1 : 0;
    }
    if (i + 1 >= static_cast<size_t>(rolling_window)) {
      double window_volume = 0.0;
      for (size_t k = i + 1 - rolling_window; k <= i; ++k) window_volume += reports[k].volume;
      out.rolling.push_back({reports[i].step,
                             static_cast<double>(window_hits) / rolling_window,
                             window_volume / rolling_window});
    }
  }
  out.coverage = static_cast<double>(hits) / static_cast<double>(reports.size());
  out.size = volume / static_cast<double>(reports.size());
  return out;
}

SummaryRecord Summarize(const std::string& method, int p,
                        std::span<const Evaluation> trials) {
  Require(!trials.empty(), ErrorCode::kEmptyReports, "no trials to summarize");
  std::vector<double> coverage;
  std::vector<double> size;
  for (const auto& t : trials) {
    coverage.push_back(t.coverage);
    size.push_back(t.size);
  }
  SummaryRecord record;
  record.method = method;
  record.p = p;
  record.trials = static_cast<int>(trials.size());
  MeanStd(coverage, record.coverage_mean, record.coverage_std);
  MeanStd(size, record.size_mean, record.size_std);
  return record;
}

}  // namespace ellipsoid_cp
