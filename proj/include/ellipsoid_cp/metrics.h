#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ellipsoid_cp/spci.h"

namespace ellipsoid_cp {

struct RollingPoint {
  std::int64_t step = 0;
  double coverage = 0.0;
  double size = 0.0;
};

struct Evaluation {
  double coverage = 0.0;  // fraction of reports with contained == true
  double size = 0.0;      // mean volume
  std::int64_t steps = 0;
  // Trailing means over `rolling_window` reports, one per report once the
  // window is full; `step` is that of the last report in the window.
  std::vector<RollingPoint> rolling;
};

Evaluation Evaluate(std::span<const RegionReport> reports, int rolling_window);

struct SummaryRecord {
  std::string method;
  int p = 0;
  double coverage_mean = 0.0;
  double coverage_std = 0.0;
  double size_mean = 0.0;
  double size_std = 0.0;
  int trials = 0;
};

// Mean and sample standard deviation (n - 1; 0 for a single trial).
SummaryRecord Summarize(const std::string& method, int p,
                        std::span<const Evaluation> trials);

}  // namespace ellipsoid_cp
