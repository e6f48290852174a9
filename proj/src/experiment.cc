#include "ellipsoid_cp/experiment.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "ellipsoid_cp/csv_io.h"
#include "ellipsoid_cp/error.h"

namespace ellipsoid_cp {
namespace {

using nlohmann::json;

constexpr std::pair<Method, const char*> kMethodNames[] = {
    {Method::kMultiDimSpci, "multidim_spci"},
    {Method::kCoordwiseSpci, "coordwise_spci"},
    {Method::kCopula, "copula"},
    {Method::kHull, "hull"},
};

// Walks the raw document to find the line of a key path; falls back to the
// last line found.
int LineOf(const std::string& raw, const std::vector<std::string>& path) {
  size_t pos = 0;
  for (const auto& key : path) {
    if (!key.empty() && key.front() == '[') continue;
    const size_t found = raw.find("\"" + key + "\"", pos);
    if (found == std::string::npos) break;
    pos = found;
  }
  return 1 + static_cast<int>(std::count(raw.begin(), raw.begin() + pos, '\n'));
}

class ConfigReader {
 public:
  explicit ConfigReader(const std::string& raw) : raw_(raw) {}

  [[noreturn]] void Error(const std::vector<std::string>& path, const std::string& msg) const {
    std::string joined;
    for (const auto& key : path) {
      if (!joined.empty() && key.front() != '[') joined += '.';
      joined += key;
    }
    if (joined.empty()) joined = "<root>";
    Fail(ErrorCode::kConfigError,
         "line " + std::to_string(LineOf(raw_, path)) + ", field '" + joined + "': " + msg);
  }

  void RequireObject(const json& j, const std::vector<std::string>& path,
                     std::initializer_list<const char*> allowed) const {
    if (!j.is_object()) Error(path, "expected an object");
    for (const auto& item : j.items()) {
      const bool known = std::any_of(allowed.begin(), allowed.end(),
                                     [&](const char* k) { return item.key() == k; });
      if (!known) {
        auto sub = path;
        sub.push_back(item.key());
        Error(sub, "unknown field");
      }
    }
  }

  template <typename T>
  bool Read(const json& parent, const std::vector<std::string>& parent_path,
            const char* key, T& out) const {
    if (!parent.contains(key)) return false;
    auto path = parent_path;
    path.push_back(key);
    const json& value = parent.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!value.is_boolean()) Error(path, "expected a boolean");
      out = value.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!value.is_number_integer()) Error(path, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (value.is_number_unsigned()) {
          out = value.get<T>();
        } else {
          if (value.get<long long>() < 0) Error(path, "expected a non-negative integer");
          out = static_cast<T>(value.get<long long>());
        }
      } else {
        out = static_cast<T>(value.get<long long>());
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!value.is_number()) Error(path, "expected a number");
      out = value.get<double>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!value.is_string()) Error(path, "expected a string");
      out = value.get<std::string>();
    }
    return true;
  }

  void Check(bool ok, const std::vector<std::string>& path, const std::string& msg) const {
    if (!ok) Error(path, msg);
  }

 private:
  const std::string& raw_;
};

void ParseQrf(const ConfigReader& r, const json& j, const std::vector<std::string>& path,
              QrfConfig& q) {
  r.RequireObject(j, path, {"n_trees", "max_depth", "min_leaf", "subsample_fraction",
                            "features_per_split", "max_bins"});
  r.Read(j, path, "n_trees", q.n_trees);
  r.Read(j, path, "max_depth", q.max_depth);
  r.Read(j, path, "min_leaf", q.min_leaf);
  r.Read(j, path, "subsample_fraction", q.subsample_fraction);
  r.Read(j, path, "features_per_split", q.features_per_split);
  r.Read(j, path, "max_bins", q.max_bins);
  r.Check(q.n_trees >= 1, path, "n_trees must be >= 1");
  r.Check(q.max_depth >= 0, path, "max_depth must be >= 0");
  r.Check(q.min_leaf >= 1, path, "min_leaf must be >= 1");
  r.Check(q.subsample_fraction > 0.0 && q.subsample_fraction <= 1.0, path,
          "subsample_fraction must lie in (0, 1]");
  r.Check(q.features_per_split >= 0, path, "features_per_split must be >= 0");
  r.Check(q.max_bins >= 2, path, "max_bins must be >= 2");
}

void ParseQuantile(const ConfigReader& r, const json& j,
                   const std::vector<std::string>& path, QuantileEngineConfig& q) {
  r.RequireObject(j, path, {"kind", "window", "refit_stride", "qrf"});
  std::string kind;
  if (r.Read(j, path, "kind", kind)) {
    if (kind == "qrf") {
      q.kind = QuantileKind::kQrf;
    } else if (kind == "empirical") {
      q.kind = QuantileKind::kEmpirical;
    } else {
      r.Error({"quantile", "kind"}, "expected 'qrf' or 'empirical'");
    }
  }
  r.Read(j, path, "window", q.window);
  r.Read(j, path, "refit_stride", q.refit_stride);
  r.Check(q.window >= 1, path, "window must be >= 1");
  r.Check(q.refit_stride >= 1, path, "refit_stride must be >= 1");
  if (j.contains("qrf")) {
    auto sub = path;
    sub.push_back("qrf");
    ParseQrf(r, j.at("qrf"), sub, q.qrf);
  }
}

void ParseSpci(const ConfigReader& r, const json& j, const std::vector<std::string>& path,
               SpciConfig& s) {
  r.RequireObject(j, path, {"rho", "beta_grid_size", "search_beta", "covariance_mode",
                            "local", "window_T", "covariance_refresh_stride"});
  r.Read(j, path, "rho", s.rho);
  r.Read(j, path, "beta_grid_size", s.beta_grid_size);
  r.Read(j, path, "search_beta", s.search_beta);
  r.Read(j, path, "window_T", s.window_T);
  r.Read(j, path, "covariance_refresh_stride", s.covariance_refresh_stride);
  std::string mode;
  if (r.Read(j, path, "covariance_mode", mode)) {
    if (mode == "global") {
      s.covariance_mode = CovarianceMode::kGlobal;
    } else if (mode == "local") {
      s.covariance_mode = CovarianceMode::kLocal;
    } else {
      r.Error({"spci", "covariance_mode"}, "expected 'global' or 'local'");
    }
  }
  if (j.contains("local")) {
    const std::vector<std::string> sub{"spci", "local"};
    r.RequireObject(j.at("local"), sub, {"neighbor_fraction", "blend"});
    r.Read(j.at("local"), sub, "neighbor_fraction", s.local.neighbor_fraction);
    r.Read(j.at("local"), sub, "blend", s.local.blend);
    r.Check(s.local.neighbor_fraction > 0.0 && s.local.neighbor_fraction <= 1.0, sub,
            "neighbor_fraction must lie in (0, 1]");
    r.Check(s.local.blend >= 0.0 && s.local.blend <= 1.0, sub, "blend must lie in [0, 1]");
  }
  r.Check(s.rho > 0.0, path, "rho must be positive");
  r.Check(s.beta_grid_size >= 2, path, "beta_grid_size must be >= 2");
  r.Check(s.window_T >= 0, path, "window_T must be >= 0");
  r.Check(s.covariance_refresh_stride >= 1, path,
          "covariance_refresh_stride must be >= 1");
}

void ParseData(const ConfigReader& r, const json& j, ExperimentConfig& cfg) {
  const std::vector<std::string> path{"data"};
  r.RequireObject(j, path, {"simulate", "csv"});
  r.Check(j.contains("simulate") != j.contains("csv"), path,
          "exactly one of 'simulate' or 'csv' is required");
  if (j.contains("simulate")) {
    const std::vector<std::string> sub{"data", "simulate"};
    const json& s = j.at("simulate");
    r.RequireObject(s, sub, {"kind", "p", "order", "n", "burn_in", "spectral_radius_cap",
                             "noise"});
    SimulateSource src;
    std::string text;
    if (r.Read(s, sub, "kind", text)) {
      if (text == "ar") {
        src.kind = ProcessKind::kAr;
      } else if (text == "var") {
        src.kind = ProcessKind::kVar;
      } else {
        r.Error({"data", "simulate", "kind"}, "expected 'ar' or 'var'");
      }
    }
    if (r.Read(s, sub, "noise", text)) {
      if (text == "gaussian") {
        src.noise = NoiseKind::kGaussian;
      } else if (text == "uniform") {
        src.noise = NoiseKind::kUniformCube;
      } else {
        r.Error({"data", "simulate", "noise"}, "expected 'gaussian' or 'uniform'");
      }
    }
    r.Read(s, sub, "p", src.p);
    r.Read(s, sub, "order", src.order);
    r.Read(s, sub, "n", src.n);
    r.Read(s, sub, "burn_in", src.burn_in);
    r.Read(s, sub, "spectral_radius_cap", src.spectral_radius_cap);
    r.Check(src.p >= 1, sub, "p must be >= 1");
    r.Check(src.order >= 1, sub, "order must be >= 1");
    r.Check(src.n >= 1, sub, "n must be >= 1");
    r.Check(src.burn_in >= 0, sub, "burn_in must be >= 0");
    r.Check(src.spectral_radius_cap > 0.0 && src.spectral_radius_cap <= 1.0, sub,
            "spectral_radius_cap must lie in (0, 1]");
    cfg.simulate = src;
  } else {
    const std::vector<std::string> sub{"data", "csv"};
    const json& c = j.at("csv");
    r.RequireObject(c, sub, {"path", "columns"});
    CsvSource src;
    std::string text;
    r.Check(r.Read(c, sub, "path", text), sub, "'path' is required");
    src.path = text;
    if (c.contains("columns")) {
      const json& cols = c.at("columns");
      r.Check(cols.is_array(), {"data", "csv", "columns"}, "expected an array of names");
      for (const auto& col : cols) {
        r.Check(col.is_string(), {"data", "csv", "columns"}, "column names must be strings");
        src.columns.push_back(col.get<std::string>());
      }
    }
    cfg.csv = src;
  }
}

std::vector<RegionReport> Drive(const PreparedSeries& prepared, auto&& step) {
  std::vector<RegionReport> reports;
  reports.reserve(prepared.test_count());
  for (Eigen::Index r = prepared.test_begin; r < prepared.design.rows(); ++r) {
    reports.push_back(step(prepared.design.features.row(r).transpose(),
                           prepared.design.targets.row(r).transpose(),
                           static_cast<std::int64_t>(prepared.design.TargetIndex(r))));
  }
  return reports;
}

// Runs jobs [0, count) on up to `threads` workers.
template <typename Job>
void ParallelFor(int count, int threads, Job&& job) {
  const int workers = std::max(1, std::min(threads, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          job(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::string MethodName(Method method) {
  for (const auto& [m, name] : kMethodNames) {
    if (m == method) return name;
  }
  return "unknown";
}

std::optional<Method> ParseMethod(const std::string& name) {
  for (const auto& [m, text] : kMethodNames) {
    if (name == text) return m;
  }
  return std::nullopt;
}

ExperimentConfig ParseExperimentConfig(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    const size_t offset = std::min(e.byte, json_text.size());
    const int line = 1 + static_cast<int>(std::count(
                             json_text.begin(), json_text.begin() + offset, '\n'));
    Fail(ErrorCode::kConfigError,
         "line " + std::to_string(line) + ": malformed JSON: " + e.what());
  }
  const ConfigReader r(json_text);
  r.RequireObject(root, {}, {"data", "methods", "alpha", "split", "forecaster", "spci",
                             "quantile", "coordwise_mode", "trials", "seed",
                             "rolling_window", "output_dir", "threads"});
  ExperimentConfig cfg;
  cfg.split.lags.lag_order = 20;

  r.Check(root.contains("data"), {"data"}, "'data' is required");
  ParseData(r, root.at("data"), cfg);

  r.Check(root.contains("methods"), {"methods"}, "'methods' is required");
  const json& methods = root.at("methods");
  r.Check(methods.is_array() && !methods.empty(), {"methods"},
          "expected a non-empty array of method names");
  for (size_t i = 0; i < methods.size(); ++i) {
    const std::vector<std::string> path{"methods", "[" + std::to_string(i) + "]"};
    r.Check(methods[i].is_string(), path, "method names must be strings");
    const auto method = ParseMethod(methods[i].get<std::string>());
    r.Check(method.has_value(), path,
            "unknown method '" + methods[i].get<std::string>() +
                "' (expected multidim_spci, coordwise_spci, copula or hull)");
    r.Check(std::find(cfg.methods.begin(), cfg.methods.end(), *method) == cfg.methods.end(),
            path, "duplicate method");
    cfg.methods.push_back(*method);
  }

  r.Read(root, {}, "alpha", cfg.alpha);
  r.Check(cfg.alpha > 0.0 && cfg.alpha < 1.0, {"alpha"}, "alpha must lie in (0, 1)");

  if (root.contains("split")) {
    r.RequireObject(root.at("split"), {"split"}, {"train_fraction"});
    r.Read(root.at("split"), {"split"}, "train_fraction", cfg.train_fraction);
  }
  r.Check(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0,
          {"split", "train_fraction"}, "train_fraction must lie in (0, 1)");

  if (root.contains("forecaster")) {
    const std::vector<std::string> path{"forecaster"};
    const json& f = root.at("forecaster");
    r.RequireObject(f, path, {"lag_order", "ridge", "fit_fraction", "intercept"});
    r.Read(f, path, "lag_order", cfg.split.lags.lag_order);
    r.Read(f, path, "intercept", cfg.split.lags.intercept);
    r.Read(f, path, "ridge", cfg.split.ridge);
    r.Read(f, path, "fit_fraction", cfg.split.fit_fraction);
  }
  r.Check(cfg.split.lags.lag_order >= 1, {"forecaster", "lag_order"},
          "lag_order must be >= 1");
  r.Check(cfg.split.ridge >= 0.0, {"forecaster", "ridge"}, "ridge must be >= 0");
  r.Check(cfg.split.fit_fraction > 0.0 && cfg.split.fit_fraction < 1.0,
          {"forecaster", "fit_fraction"}, "fit_fraction must lie in (0, 1)");

  if (root.contains("spci")) ParseSpci(r, root.at("spci"), {"spci"}, cfg.spci);
  if (root.contains("quantile")) {
    ParseQuantile(r, root.at("quantile"), {"quantile"}, cfg.spci.quantile);
  }
  std::string mode;
  if (r.Read(root, {}, "coordwise_mode", mode)) {
    if (mode == "signed") {
      cfg.coordwise_mode = IntervalMode::kSigned;
    } else if (mode == "absolute") {
      cfg.coordwise_mode = IntervalMode::kAbsolute;
    } else {
      r.Error({"coordwise_mode"}, "expected 'signed' or 'absolute'");
    }
  }

  r.Read(root, {}, "trials", cfg.trials);
  r.Check(cfg.trials >= 1, {"trials"}, "trials must be >= 1");
  r.Read(root, {}, "seed", cfg.seed);
  r.Read(root, {}, "rolling_window", cfg.rolling_window);
  r.Check(cfg.rolling_window >= 1, {"rolling_window"}, "rolling_window must be >= 1");
  std::string dir;
  if (r.Read(root, {}, "output_dir", dir)) cfg.output_dir = dir;
  r.Read(root, {}, "threads", cfg.threads);
  r.Check(cfg.threads >= 1, {"threads"}, "threads must be >= 1");
  cfg.spci.alpha = cfg.alpha;
  return cfg;
}

ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  Require(in.good(), ErrorCode::kConfigError, "cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseExperimentConfig(buffer.str());
}

void ValidateExperimentConfig(const ExperimentConfig& cfg) {
  Require(cfg.simulate.has_value() != cfg.csv.has_value(), ErrorCode::kConfigError,
          "exactly one data source is required");
  Require(!cfg.methods.empty(), ErrorCode::kConfigError, "at least one method is required");
  Require(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0, ErrorCode::kConfigError,
          "train_fraction must lie in (0, 1)");
  Require(cfg.trials >= 1, ErrorCode::kConfigError, "trials must be >= 1");
  Require(cfg.rolling_window >= 1, ErrorCode::kConfigError, "rolling_window must be >= 1");
  Require(cfg.threads >= 1, ErrorCode::kConfigError, "threads must be >= 1");
  Require(cfg.alpha == cfg.spci.alpha, ErrorCode::kConfigError,
          "alpha and spci.alpha disagree");
  try {
    ValidateSpciConfig(cfg.spci);
  } catch (const Error& e) {
    Fail(ErrorCode::kConfigError, e.what());
  }
  const bool has_hull =
      std::find(cfg.methods.begin(), cfg.methods.end(), Method::kHull) != cfg.methods.end();
  if (has_hull && cfg.simulate) {
    Require(cfg.simulate->p >= 2 && cfg.simulate->p <= kMaxHullDim, ErrorCode::kConfigError,
            "hull method needs 2 <= p <= " + std::to_string(kMaxHullDim));
  }
}

MultiSeries LoadTrialSeries(const ExperimentConfig& cfg, int trial) {
  if (cfg.csv) return IngestCsv(cfg.csv->path, cfg.csv->columns);
  const SimulateSource& src = *cfg.simulate;
  VarProcessSpec spec = src.kind == ProcessKind::kAr
                            ? MakeArSpec(src.p, src.order, cfg.seed, src.spectral_radius_cap)
                            : MakeVarSpec(src.p, src.order, cfg.seed, src.spectral_radius_cap);
  spec.noise = src.noise;
  spec.seed = cfg.seed + static_cast<std::uint64_t>(trial);
  return Simulate(spec, src.n, src.burn_in);
}

std::vector<RegionReport> RunMethod(Method method, const PreparedSeries& prepared,
                                    const ExperimentConfig& cfg, std::uint64_t trial_seed) {
  SpciConfig spci = cfg.spci;
  spci.alpha = cfg.alpha;
  spci.quantile.qrf.rng_seed = trial_seed;
  if (prepared.test_count() == 0) return {};
  switch (method) {
    case Method::kMultiDimSpci:
      return RunSpci(prepared, spci);
    case Method::kCoordwiseSpci: {
      ScalarSpciConfig scalar;
      scalar.alpha = cfg.alpha;
      scalar.beta_grid_size = spci.beta_grid_size;
      scalar.mode = cfg.coordwise_mode;
      scalar.quantile = spci.quantile;
      scalar.window_T = spci.window_T;
      CoordwiseSpci engine(prepared.forecaster, scalar, prepared.calibration_residuals);
      return Drive(prepared, [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                 std::int64_t step) { return engine.Step(x, y, step); });
    }
    case Method::kCopula: {
      CopulaBaseline engine(prepared.forecaster, cfg.alpha, prepared.calibration_residuals,
                            spci.window_T);
      return Drive(prepared, [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                 std::int64_t step) { return engine.Step(x, y, step); });
    }
    case Method::kHull: {
      HullBaseline engine(prepared.forecaster, spci, prepared.calibration_residuals,
                          &prepared.calibration_features);
      return Drive(prepared, [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                 std::int64_t step) { return engine.Step(x, y, step); });
    }
  }
  return {};
}

ExperimentResult RunExperiment(const ExperimentConfig& cfg) {
  ValidateExperimentConfig(cfg);
  const int threads = cfg.threads;
  std::vector<PreparedSeries> prepared(cfg.trials);
  std::vector<int> dims(cfg.trials);
  ParallelFor(cfg.trials, threads, [&](int trial) {
    const MultiSeries series = LoadTrialSeries(cfg, trial);
    SplitConfig split = cfg.split;
    split.train_size = static_cast<Eigen::Index>(
        std::floor(cfg.train_fraction * static_cast<double>(series.length())));
    prepared[trial] = PrepareSeries(series, split);
    dims[trial] = static_cast<int>(series.dim());
  });

  const int methods = static_cast<int>(cfg.methods.size());
  ExperimentResult result;
  result.trials.resize(static_cast<size_t>(cfg.trials) * methods);
  ParallelFor(cfg.trials * methods, threads, [&](int job) {
    const int trial = job / methods;
    const Method method = cfg.methods[job % methods];
    TrialResult& out = result.trials[job];
    out.trial = trial;
    out.seed = cfg.seed + static_cast<std::uint64_t>(trial);
    out.method = method;
    out.p = dims[trial];
    out.reports = RunMethod(method, prepared[trial], cfg, out.seed);
    Require(!out.reports.empty(), ErrorCode::kSeriesTooShort,
            "no test steps after the training split");
    out.evaluation = Evaluate(out.reports, cfg.rolling_window);
    spdlog::debug("trial {} {}: coverage {:.4f} size {:.6g}", trial, MethodName(method),
                  out.evaluation.coverage, out.evaluation.size);
  });

  for (int m = 0; m < methods; ++m) {
    std::vector<Evaluation> evals;
    for (int t = 0; t < cfg.trials; ++t) evals.push_back(result.trials[t * methods + m].evaluation);
    result.summary.push_back(Summarize(MethodName(cfg.methods[m]), dims.front(), evals));
  }
  return result;
}

std::string SummaryJson(const ExperimentResult& result) {
  json doc;
  doc["schema_version"] = kSummarySchemaVersion;
  json per_trial = json::array();
  for (const auto& t : result.trials) {
    per_trial.push_back({{"trial", t.trial},
                         {"seed", t.seed},
                         {"method", MethodName(t.method)},
                         {"p", t.p},
                         {"coverage", t.evaluation.coverage},
                         {"size", t.evaluation.size},
                         {"steps", t.evaluation.steps}});
  }
  doc["per_trial"] = std::move(per_trial);
  json summary = json::array();
  for (const auto& s : result.summary) {
    summary.push_back({{"method", s.method},
                       {"p", s.p},
                       {"coverage_mean", s.coverage_mean},
                       {"coverage_std", s.coverage_std},
                       {"size_mean", s.size_mean},
                       {"size_std", s.size_std},
                       {"trials", s.trials}});
  }
  doc["summary"] = std::move(summary);
  return doc.dump(2) + "\n";
}

void WriteExperimentOutputs(const ExperimentResult& result,
                            const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  Require(!ec, ErrorCode::kFileNotFound, "cannot create " + dir.string());
  {
    std::ofstream out(dir / "summary.json", std::ios::binary);
    Require(out.good(), ErrorCode::kFileNotFound, "cannot write summary.json");
    out << SummaryJson(result);
  }
  {
    std::ofstream out(dir / "rolling.csv", std::ios::binary);
    Require(out.good(), ErrorCode::kFileNotFound, "cannot write rolling.csv");
    WriteRollingHeader(out);
    for (const auto& t : result.trials) {
      for (const auto& point : t.evaluation.rolling) {
        WriteRollingRow(out, {t.trial, MethodName(t.method), point});
      }
    }
  }
  {
    std::ofstream out(dir / "regions.csv", std::ios::binary);
    Require(out.good(), ErrorCode::kFileNotFound, "cannot write regions.csv");
    WriteRegionsHeader(out);
    for (const auto& t : result.trials) {
      for (const auto& report : t.reports) {
        WriteRegionRow(out, {t.trial, MethodName(t.method), report});
      }
    }
  }
}

ExperimentResult AggregateRegions(const std::filesystem::path& regions_csv,
                                  int rolling_window, int p, std::uint64_t base_seed) {
  const std::vector<RegionRow> rows = ReadRegionsCsv(regions_csv);
  Require(!rows.empty(), ErrorCode::kEmptyReports, regions_csv.string() + " has no rows");
  std::vector<std::string> method_order;
  std::map<std::pair<std::string, int>, std::vector<RegionReport>> groups;
  int max_rank = 0;
  for (const auto& row : rows) {
    if (std::find(method_order.begin(), method_order.end(), row.method) == method_order.end()) {
      method_order.push_back(row.method);
    }
    groups[{row.method, row.trial}].push_back(row.report);
    max_rank = std::max(max_rank, row.report.rank);
  }
  if (p <= 0) p = max_rank;

  ExperimentResult result;
  std::map<std::string, std::vector<Evaluation>> per_method;
  std::vector<int> trial_ids;
  for (const auto& [key, reports] : groups) trial_ids.push_back(key.second);
  std::sort(trial_ids.begin(), trial_ids.end());
  trial_ids.erase(std::unique(trial_ids.begin(), trial_ids.end()), trial_ids.end());
  for (int trial : trial_ids) {
    for (const auto& name : method_order) {
      const auto it = groups.find({name, trial});
      if (it == groups.end()) continue;
      const auto method = ParseMethod(name);
      Require(method.has_value(), ErrorCode::kNonNumericCell,
              "unknown method '" + name + "' in " + regions_csv.string());
      TrialResult t;
      t.trial = trial;
      t.seed = base_seed + static_cast<std::uint64_t>(trial);
      t.method = *method;
      t.p = p;
      t.evaluation = Evaluate(it->second, rolling_window);
      per_method[name].push_back(t.evaluation);
      result.trials.push_back(std::move(t));
    }
  }
  for (const auto& name : method_order) {
    result.summary.push_back(Summarize(name, p, per_method[name]));
  }
  return result;
}

}  // namespace ellipsoid_cp
