#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "ellipsoid_cp/csv_io.h"
#include "ellipsoid_cp/error.h"
#include "ellipsoid_cp/experiment.h"

namespace {

using ellipsoid_cp::ErrorCode;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigError:
    case ErrorCode::kInvalidArgument:
      return kExitConfig;
    case ErrorCode::kFileNotFound:
    case ErrorCode::kNonNumericCell:
    case ErrorCode::kEmptyAfterDrop:
    case ErrorCode::kMissingColumn:
    case ErrorCode::kEmptyInput:
    case ErrorCode::kSeriesTooShort:
    case ErrorCode::kEmptyReports:
      return kExitData;
    default:
      return kExitNumerical;
  }
}

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
};

int ResolveThreads(const CommonFlags& flags, int fallback) {
  if (const char* env = std::getenv("ELLIPSOID_CP_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    ellipsoid_cp::Fail(ErrorCode::kConfigError,
                       std::string("ELLIPSOID_CP_THREADS must be a positive integer, got '") +
                           env + "'");
  }
  if (flags.threads) {
    ellipsoid_cp::Require(*flags.threads >= 1, ErrorCode::kConfigError,
                          "--threads must be >= 1");
    return *flags.threads;
  }
  return fallback;
}

ellipsoid_cp::ExperimentConfig LoadWithOverrides(const CommonFlags& flags) {
  ellipsoid_cp::ExperimentConfig cfg = ellipsoid_cp::LoadExperimentConfig(flags.config);
  if (flags.seed) cfg.seed = *flags.seed;
  if (!flags.out.empty()) cfg.output_dir = flags.out;
  cfg.threads = ResolveThreads(flags, cfg.threads);
  return cfg;
}

int Simulate(const CommonFlags& flags) {
  const auto cfg = LoadWithOverrides(flags);
  ellipsoid_cp::Require(cfg.simulate.has_value(), ErrorCode::kConfigError,
                        "field 'data.simulate' is required for simulate");
  std::filesystem::path target = cfg.output_dir;
  if (target.extension() != ".csv") {
    std::filesystem::create_directories(target);
    target /= "series.csv";
  } else if (target.has_parent_path()) {
    std::filesystem::create_directories(target.parent_path());
  }
  ellipsoid_cp::WriteSeriesCsv(target, ellipsoid_cp::LoadTrialSeries(cfg, 0));
  spdlog::info("wrote {}", target.string());
  return kExitOk;
}

int Run(const CommonFlags& flags) {
  const auto cfg = LoadWithOverrides(flags);
  const auto result = ellipsoid_cp::RunExperiment(cfg);
  ellipsoid_cp::WriteExperimentOutputs(result, cfg.output_dir);
  for (const auto& s : result.summary) {
    std::cout << s.method << " p=" << s.p << " coverage=" << s.coverage_mean << " ("
              << s.coverage_std << ") size=" << s.size_mean << " (" << s.size_std << ")\n";
  }
  return kExitOk;
}

int Report(const CommonFlags& flags, const std::string& in_dir) {
  int rolling_window = 100;
  int p = 0;
  std::uint64_t seed = 0;
  std::filesystem::path out = flags.out;
  if (!flags.config.empty()) {
    const auto cfg = LoadWithOverrides(flags);
    rolling_window = cfg.rolling_window;
    if (cfg.simulate) p = cfg.simulate->p;
    seed = cfg.seed;
    if (out.empty()) out = cfg.output_dir;
  }
  if (flags.seed) seed = *flags.seed;
  ellipsoid_cp::Require(!out.empty() || !in_dir.empty(), ErrorCode::kConfigError,
                        "report needs --out or --in");
  const std::filesystem::path source = in_dir.empty() ? out : std::filesystem::path(in_dir);
  if (out.empty()) out = source;
  const auto result =
      ellipsoid_cp::AggregateRegions(source / "regions.csv", rolling_window, p, seed);
  std::filesystem::create_directories(out);
  std::ofstream(out / "summary.json", std::ios::binary) << ellipsoid_cp::SummaryJson(result);
  {
    std::ofstream rolling(out / "rolling.csv", std::ios::binary);
    ellipsoid_cp::WriteRollingHeader(rolling);
    for (const auto& t : result.trials) {
      for (const auto& point : t.evaluation.rolling) {
        ellipsoid_cp::WriteRollingRow(rolling,
                                      {t.trial, ellipsoid_cp::MethodName(t.method), point});
      }
    }
  }
  for (const auto& s : result.summary) {
    std::cout << s.method << " p=" << s.p << " coverage=" << s.coverage_mean
              << " size=" << s.size_mean << '\n';
  }
  return kExitOk;
}

void AddCommon(CLI::App* cmd, CommonFlags& flags, bool config_required) {
  auto* config = cmd->add_option("--config", flags.config, "experiment JSON file");
  if (config_required) config->required();
  cmd->add_option("--seed", flags.seed, "base seed (overrides config)");
  cmd->add_option("--out", flags.out, "output directory (overrides config)");
  cmd->add_option("--threads", flags.threads, "worker threads");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ellipsoidal conformal prediction regions for multivariate time series"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  CommonFlags sim_flags;
  CommonFlags run_flags;
  CommonFlags report_flags;
  std::string report_in;
  auto* simulate = app.add_subcommand("simulate", "write a synthetic series as CSV");
  AddCommon(simulate, sim_flags, true);
  auto* run = app.add_subcommand("run", "run an experiment config");
  AddCommon(run, run_flags, true);
  auto* report = app.add_subcommand("report", "re-aggregate regions.csv");
  AddCommon(report, report_flags, false);
  report->add_option("--in", report_in, "directory holding regions.csv (default: --out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*simulate) return Simulate(sim_flags);
    if (*run) return Run(run_flags);
    return Report(report_flags, report_in);
  } catch (const ellipsoid_cp::Error& e) {
    spdlog::error("{}", e.what());
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitNumerical;
  }
}
