#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "ellipsoid_cp/metrics.h"
#include "ellipsoid_cp/series.h"
#include "ellipsoid_cp/spci.h"

namespace ellipsoid_cp {

// Reads a headered, comma-separated file. `columns` selects by header name;
// empty selects every column. Rows with a missing selected value ("", "NA",
// "NaN", "null", any case) are dropped and the count is logged.
MultiSeries IngestCsv(const std::filesystem::path& path,
                      const std::vector<std::string>& columns = {});

void WriteSeriesCsv(const std::filesystem::path& path, const MultiSeries& series);

// '%.10g'
std::string FormatDouble(double value);

struct RegionRow {
  int trial = 0;
  std::string method;
  RegionReport report;
};

struct RollingRow {
  int trial = 0;
  std::string method;
  RollingPoint point;
};

void WriteRegionsHeader(std::ostream& out);
void WriteRegionRow(std::ostream& out, const RegionRow& row);
std::vector<RegionRow> ReadRegionsCsv(const std::filesystem::path& path);

void WriteRollingHeader(std::ostream& out);
void WriteRollingRow(std::ostream& out, const RollingRow& row);

}  // namespace ellipsoid_cp
