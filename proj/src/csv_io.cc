#include "ellipsoid_cp/csv_io.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <string_view>

#include <spdlog/spdlog.h>

#include "ellipsoid_cp/error.h"

namespace ellipsoid_cp {
namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> SplitRow(std::string_view line) {
  std::vector<std::string_view> cells;
  size_t begin = 0;
  for (;;) {
    const size_t comma = line.find(',', begin);
    if (comma == std::string_view::npos) {
      cells.push_back(Trim(line.substr(begin)));
      return cells;
    }
    cells.push_back(Trim(line.substr(begin, comma - begin)));
    begin = comma + 1;
  }
}

bool IsMissing(std::string_view cell) {
  std::string lower(cell);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return lower.empty() || lower == "na" || lower == "nan" || lower == "null";
}

bool ParseDouble(std::string_view cell, double& value) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

bool ParseInt(std::string_view cell, long long& value) {
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

std::ifstream OpenInput(const std::filesystem::path& path) {
  std::ifstream in(path);
  Require(in.good(), ErrorCode::kFileNotFound, "cannot open " + path.string());
  return in;
}

void StripCr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::string FormatDouble(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

MultiSeries IngestCsv(const std::filesystem::path& path,
                      const std::vector<std::string>& columns) {
  std::ifstream in = OpenInput(path);
  std::string line;
  Require(static_cast<bool>(std::getline(in, line)), ErrorCode::kEmptyInput,
          path.string() + " has no header row");
  StripCr(line);
  std::vector<std::string> header;
  for (auto cell : SplitRow(line)) header.emplace_back(cell);

  std::vector<size_t> selected;
  MultiSeries out;
  if (columns.empty()) {
    for (size_t c = 0; c < header.size(); ++c) selected.push_back(c);
    out.names = header;
  } else {
    for (const auto& name : columns) {
      const auto it = std::find(header.begin(), header.end(), name);
      Require(it != header.end(), ErrorCode::kMissingColumn,
              "column '" + name + "' not found in " + path.string());
      selected.push_back(static_cast<size_t>(it - header.begin()));
      out.names.push_back(name);
    }
  }

  std::vector<double> flat;
  size_t kept = 0;
  size_t dropped = 0;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    StripCr(line);
    if (Trim(line).empty()) continue;
    const auto cells = SplitRow(line);
    std::vector<double> row;
    row.reserve(selected.size());
    bool missing = false;
    for (size_t k = 0; k < selected.size(); ++k) {
      const size_t c = selected[k];
      const std::string_view cell = c < cells.size() ? cells[c] : std::string_view();
      if (IsMissing(cell)) {
        missing = true;
        continue;
      }
      double value = 0.0;
      if (!ParseDouble(cell, value)) {
        Fail(ErrorCode::kNonNumericCell,
             "row " + std::to_string(line_no) + ", column '" + out.names[k] +
                 "': cannot parse '" + std::string(cell) + "'");
      }
      if (std::isnan(value)) missing = true;
      row.push_back(value);
    }
    if (missing) {
      ++dropped;
      continue;
    }
    flat.insert(flat.end(), row.begin(), row.end());
    ++kept;
  }
  if (dropped > 0) {
    spdlog::info("{}: dropped {} row(s) with missing values", path.string(), dropped);
  }
  Require(kept > 0, ErrorCode::kEmptyAfterDrop,
          path.string() + " has no complete rows");
  out.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                              Eigen::RowMajor>>(
      flat.data(), static_cast<Eigen::Index>(kept),
      static_cast<Eigen::Index>(selected.size()));
  return out;
}

void WriteSeriesCsv(const std::filesystem::path& path, const MultiSeries& series) {
  std::ofstream out(path);
  Require(out.good(), ErrorCode::kFileNotFound, "cannot write " + path.string());
  for (Eigen::Index j = 0; j < series.dim(); ++j) {
    if (j > 0) out << ',';
    out << (j < static_cast<Eigen::Index>(series.names.size()) ? series.names[j]
                                                               : "y" + std::to_string(j));
  }
  out << '\n';
  for (Eigen::Index t = 0; t < series.length(); ++t) {
    for (Eigen::Index j = 0; j < series.dim(); ++j) {
      if (j > 0) out << ',';
      out << FormatDouble(series.values(t, j));
    }
    out << '\n';
  }
}

void WriteRegionsHeader(std::ostream& out) {
  out << "trial,method,step,contained,volume,beta_hat,inner_sq,outer_sq,rank\n";
}

void WriteRegionRow(std::ostream& out, const RegionRow& row) {
  const RegionReport& r = row.report;
  out << row.trial << ',' << row.method << ',' << r.step << ',' << (r.contained ? 1 : 0)
      << ',' << FormatDouble(r.volume) << ',' << FormatDouble(r.beta_hat) << ','
      << FormatDouble(r.inner_sq) << ',' << FormatDouble(r.outer_sq) << ',' << r.rank
      << '\n';
}

std::vector<RegionRow> ReadRegionsCsv(const std::filesystem::path& path) {
  std::ifstream in = OpenInput(path);
  std::string line;
  Require(static_cast<bool>(std::getline(in, line)), ErrorCode::kEmptyInput,
          path.string() + " has no header row");
  std::vector<RegionRow> rows;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    StripCr(line);
    if (Trim(line).empty()) continue;
    const auto cells = SplitRow(line);
    auto bad = [&](const char* field) {
      Fail(ErrorCode::kNonNumericCell, path.string() + " row " + std::to_string(line_no) +
                                           ": bad " + field);
    };
    if (cells.size() != 9) bad("column count");
    RegionRow row;
    long long integer = 0;
    if (!ParseInt(cells[0], integer)) bad("trial");
    row.trial = static_cast<int>(integer);
    row.method = std::string(cells[1]);
    if (!ParseInt(cells[2], integer)) bad("step");
    row.report.step = integer;
    if (!ParseInt(cells[3], integer)) bad("contained");
    row.report.contained = integer != 0;
    if (!ParseDouble(cells[4], row.report.volume)) bad("volume");
    if (!ParseDouble(cells[5], row.report.beta_hat)) bad("beta_hat");
    if (!ParseDouble(cells[6], row.report.inner_sq)) bad("inner_sq");
    if (!ParseDouble(cells[7], row.report.outer_sq)) bad("outer_sq");
    if (!ParseInt(cells[8], integer)) bad("rank");
    row.report.rank = static_cast<int>(integer);
    rows.push_back(std::move(row));
  }
  return rows;
}

void WriteRollingHeader(std::ostream& out) {
  out << "trial,step,method,rolling_coverage,rolling_size\n";
}

void WriteRollingRow(std::ostream& out, const RollingRow& row) {
  out << row.trial << ',' << row.point.step << ',' << row.method << ','
      << FormatDouble(row.point.coverage) << ',' << FormatDouble(row.point.size) << '\n';
}

}  // namespace ellipsoid_cp
