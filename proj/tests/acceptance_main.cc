// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ellipsoid_cp/baselines.h"
#include "ellipsoid_cp/csv_io.h"
#include "ellipsoid_cp/datagen.h"
#include "ellipsoid_cp/experiment.h"
#include "ellipsoid_cp/spci.h"
#include "oracles.h"

namespace {

using namespace ellipsoid_cp;
namespace fs = std::filesystem;

constexpr std::uint64_t kSeed = 2024;
constexpr double kAlpha = 0.1;

int failures = 0;

void Report(int criterion, bool pass, const std::string& detail) {
  std::printf("[criterion %d] %s: %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string Fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

class ZeroForecaster : public Forecaster {
 public:
  explicit ZeroForecaster(int p) : p_(p) {}
  Eigen::VectorXd Predict(const Eigen::VectorXd&) const override {
    return Eigen::VectorXd::Zero(p_);
  }

 private:
  int p_;
};

// Desk-scale simulation: 8000 train / 2000 test, lag-5 linear predictor,
// quantile refit every 10 steps, 10 trials.
ExperimentConfig DeskConfig(ProcessKind kind, int p) {
  ExperimentConfig cfg;
  SimulateSource src;
  src.kind = kind;
  src.p = p;
  src.order = 5;
  src.n = 10000;
  cfg.simulate = src;
  cfg.methods = {Method::kMultiDimSpci, Method::kCoordwiseSpci};
  cfg.alpha = kAlpha;
  cfg.spci.alpha = kAlpha;
  cfg.train_fraction = 0.8;
  cfg.split.lags.lag_order = 5;
  cfg.spci.quantile.refit_stride = 10;
  cfg.trials = 10;
  cfg.seed = kSeed;
  return cfg;
}

const SummaryRecord& Find(const ExperimentResult& r, const std::string& method) {
  for (const auto& s : r.summary)
    if (s.method == method) return s;
  throw std::runtime_error("missing method " + method);
}

bool Within(double x, double lo, double hi) { return x >= lo && x <= hi; }

std::string Describe(const ExperimentResult& r) {
  const auto& m = Find(r, "multidim_spci");
  const auto& c = Find(r, "coordwise_spci");
  return Fmt("multidim cov %.4f (%.4f) size %.4g | coordwise cov %.4f (%.4f) size %.4g | "
             "ratio %.4f",
             m.coverage_mean, m.coverage_std, m.size_mean, c.coverage_mean, c.coverage_std,
             c.size_mean, m.size_mean / c.size_mean);
}

std::string criterion1_p2_summary;

void Criterion1() {
  bool pass = true;
  std::string detail;
  for (int p : {2, 8}) {
    const auto result = RunExperiment(DeskConfig(ProcessKind::kAr, p));
    if (p == 2) criterion1_p2_summary = SummaryJson(result);
    const auto& m = Find(result, "multidim_spci");
    const auto& c = Find(result, "coordwise_spci");
    const double ratio = m.size_mean / c.size_mean;
    const bool ok = Within(m.coverage_mean, 0.88, 0.92) && Within(c.coverage_mean, 0.88, 0.92) &&
                    ratio < (p == 2 ? 1.0 : 0.6);
    pass = pass && ok;
    detail += Fmt("p=%d %s [%s]; ", p, Describe(result).c_str(), ok ? "ok" : "out of range");
  }
  Report(1, pass, "AR(5) desk scale, coverage in [0.88, 0.92], ratio < 1.0 (p=2) / < 0.6 (p=8): " +
                      detail);
}

void Criterion2() {
  bool pass = true;
  std::string detail;
  for (int p : {2, 4}) {
    const auto result = RunExperiment(DeskConfig(ProcessKind::kVar, p));
    const auto& m = Find(result, "multidim_spci");
    const auto& c = Find(result, "coordwise_spci");
    const double ratio = m.size_mean / c.size_mean;
    const bool ok = m.coverage_mean >= 0.88 && c.coverage_mean >= 0.88 &&
                    ratio < (p == 2 ? 0.5 : 0.05);
    pass = pass && ok;
    detail += Fmt("p=%d %s [%s]; ", p, Describe(result).c_str(), ok ? "ok" : "out of range");
  }
  Report(2, pass, "VAR(5) desk scale, coverage >= 0.88, ratio < 0.5 (p=2) / < 0.05 (p=4): " +
                      detail);
}

void Criterion3() {
  bool pass = true;
  std::string detail;
  std::mt19937_64 rng(kSeed);
  for (int p : {2, 3, 5}) {
    const Eigen::MatrixXd sigma = oracle::RandomSpd(p, rng, 0.2);
    const Eigen::MatrixXd warm = oracle::GaussianRows(5000, sigma, rng);
    SpciConfig cfg;
    cfg.alpha = kAlpha;
    cfg.covariance_mode = CovarianceMode::kFixed;
    cfg.fixed_covariance = sigma;
    cfg.search_beta = false;
    cfg.quantile.kind = QuantileKind::kEmpirical;
    SpciEngine engine(std::make_shared<ZeroForecaster>(p), cfg, warm);
    const double outer = engine.Prepare(Eigen::VectorXd::Zero(1)).spec.outer_radius_sq;
    const double chi2 = oracle::Chi2Quantile(0.9, p);
    const double rel = std::abs(outer / chi2 - 1.0);
    pass = pass && rel <= 0.03;
    detail += Fmt("p=%d Q(0.9)=%.4f chi2=%.4f rel.err %.4f; ", p, outer, chi2, rel);
  }
  Report(3, pass, "outer radius vs chi-square 0.9 quantile within 3%: " + detail);
}

void Criterion4() {
  std::mt19937_64 rng(kSeed);
  std::normal_distribution<double> n01;
  double mp_err = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int p = 2 + trial % 6;
    const auto tc = Truncate(oracle::RandomSpd(p, rng, 0.01), Eigen::VectorXd::Zero(p), kDefaultRho);
    const Eigen::MatrixXd m = tc.Reconstruct();
    const Eigen::MatrixXd mp = tc.PseudoInverse();
    mp_err = std::max({mp_err, (m * mp * m - m).norm() / std::max(1.0, m.norm()),
                       (mp * m * mp - mp).norm() / std::max(1.0, mp.norm())});
  }

  auto mc_volume = [&](const TruncatedCovariance& tc, double r) {
    const int k = tc.rank();
    const Eigen::VectorXd half = (r * tc.eigenvalues().array()).sqrt();
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    int inside = 0;
    const int samples = 1000000;
    for (int s = 0; s < samples; ++s) {
      double q = 0.0;
      for (int i = 0; i < k; ++i) {
        const double z = unif(rng) * half(i);
        q += z * z / tc.eigenvalues()(i);
      }
      inside += q <= r;
    }
    return (2.0 * half).prod() * inside / samples;
  };
  // Rank 2 inside 3-D and full rank 3, rotated by a random orthogonal basis.
  const Eigen::MatrixXd q =
      Eigen::HouseholderQR<Eigen::MatrixXd>(oracle::RandomSpd(3, rng)).householderQ();
  const Eigen::MatrixXd m2 = q * Eigen::Vector3d(3.0, 0.7, 1e-9).asDiagonal() * q.transpose();
  const Eigen::MatrixXd m3 = q * Eigen::Vector3d(2.0, 1.0, 0.3).asDiagonal() * q.transpose();
  const auto tc2 = Truncate(m2, Eigen::Vector3d::Zero(), kDefaultRho);
  const auto tc3 = Truncate(m3, Eigen::Vector3d::Zero(), kDefaultRho);
  const double vol_err2 = std::abs(mc_volume(tc2, 2.0) / EllipsoidVolume(tc2, 2.0) - 1.0);
  const double vol_err3 = std::abs(mc_volume(tc3, 1.5) / EllipsoidVolume(tc3, 1.5) - 1.0);

  double affine_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int p = 2 + trial % 4;
    const Eigen::MatrixXd sigma = oracle::RandomSpd(p, rng, 0.5);
    Eigen::MatrixXd a(p, p);
    do {
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) a(i, j) = n01(rng);
    } while (std::abs(a.determinant()) < 0.1);
    Eigen::VectorXd v(p);
    for (int i = 0; i < p; ++i) v(i) = n01(rng);
    const Eigen::MatrixXd moved = a * sigma * a.transpose();
    const double s0 = PseudoInverseQuadForm(Truncate(sigma, Eigen::VectorXd::Zero(p), 1e-12), v);
    const double s1 = PseudoInverseQuadForm(
        Truncate(Eigen::MatrixXd(0.5 * (moved + moved.transpose())), Eigen::VectorXd::Zero(p), 1e-12),
        a * v);
    affine_err = std::max(affine_err, std::abs(s1 - s0) / s0);
  }
  const bool pass = mp_err <= 1e-8 && vol_err2 <= 0.02 && vol_err3 <= 0.02 && affine_err <= 1e-6;
  Report(4, pass,
         Fmt("Moore-Penrose max rel. residual %.2e (<= 1e-8), MC volume rel. err rank2 %.4f "
             "rank3 %.4f (<= 0.02), affine invariance max rel. err %.2e (<= 1e-6)",
             mp_err, vol_err2, vol_err3, affine_err));
}

void Criterion5() {
  // AR(5) series, 500 test steps with the beta grid collapsed to {0}.
  auto spec = MakeArSpec(2, 5, kSeed);
  const auto series = Simulate(spec, 3500);
  SplitConfig split;
  split.lags.lag_order = 5;
  split.train_size = 3000;
  const auto prepared = PrepareSeries(series, split);
  SpciConfig cfg;
  cfg.alpha = kAlpha;
  cfg.search_beta = false;
  cfg.quantile.qrf.rng_seed = kSeed;
  SpciEngine engine(prepared.forecaster, cfg, prepared.calibration_residuals);
  int steps = 0, radius_mismatch = 0, containment_mismatch = 0;
  for (Eigen::Index r = prepared.test_begin; r < prepared.design.rows(); ++r, ++steps) {
    const Eigen::VectorXd x = prepared.design.features.row(r).transpose();
    const Eigen::VectorXd y = prepared.design.targets.row(r).transpose();
    // Independent reconstruction of {score <= Q(1 - alpha)} from the engine's
    // score window before the step.
    const auto model = FitQuantileModel(cfg.quantile, engine.scores().Values());
    const auto region = engine.Prepare(x);
    const double q = model->Query(engine.scores().Tail(model->window()), 1.0 - kAlpha);
    const double score = PseudoInverseQuadForm(engine.covariance(), y - prepared.forecaster->Predict(x));
    const auto report = engine.Commit(region, y, r);
    if (report.inner_sq != 0.0 || report.outer_sq != q || report.beta_hat != 0.0) ++radius_mismatch;
    if (report.contained != (score <= q)) ++containment_mismatch;
  }
  Report(5, steps == 500 && radius_mismatch == 0 && containment_mismatch == 0,
         Fmt("%d steps, radius mismatches %d, containment mismatches %d", steps, radius_mismatch,
             containment_mismatch));
}

void Criterion6() {
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int n = 20000;
  Eigen::MatrixXd comonotone(n, 2);
  for (int i = 0; i < n; ++i) comonotone(i, 0) = comonotone(i, 1) = unif(rng);
  const auto cal_c = EmpiricalCopulaCalibrate(comonotone, kAlpha);
  const bool ok_c = std::abs(cal_c.u - (1.0 - kAlpha)) <= kCopulaResolution + 1.0 / n;
  std::string detail = Fmt("comonotone u=%.5f (target %.4f); ", cal_c.u, 1.0 - kAlpha);
  bool pass = ok_c;
  for (int p : {2, 3}) {
    Eigen::MatrixXd indep(n, p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j) indep(i, j) = unif(rng);
    const auto cal = EmpiricalCopulaCalibrate(indep, kAlpha);
    const double target = std::pow(1.0 - kAlpha, 1.0 / p);
    pass = pass && std::abs(cal.u - target) <= 0.01;
    detail += Fmt("independent p=%d u=%.5f (target %.5f); ", p, cal.u, target);
  }
  Report(6, pass, detail);
}

void Criterion7() {
  bool pass = true;
  int volume_violations = 0;
  double worst_cov_gap = -1.0;
  double hull_cov = 0.0, ell_cov = 0.0, hull_size = 0.0, ell_size = 0.0;
  const int trials = 10;
  for (int trial = 0; trial < trials; ++trial) {
    auto spec = MakeArSpec(2, 5, kSeed);
    spec.seed = kSeed + trial;
    const auto series = Simulate(spec, 10000);
    SplitConfig split;
    split.lags.lag_order = 5;
    split.train_size = 8000;
    const auto prepared = PrepareSeries(series, split);
    SpciConfig cfg;
    cfg.alpha = kAlpha;
    cfg.quantile.refit_stride = 10;
    cfg.quantile.qrf.rng_seed = kSeed + trial;
    HullBaseline engine(prepared.forecaster, cfg, prepared.calibration_residuals);
    int hull_hits = 0, ell_hits = 0, steps = 0;
    double hv = 0.0, ev = 0.0;
    for (Eigen::Index r = prepared.test_begin; r < prepared.design.rows(); ++r, ++steps) {
      RegionReport ell;
      const auto hull = engine.Step(prepared.design.features.row(r).transpose(),
                                    prepared.design.targets.row(r).transpose(), r, &ell);
      hull_hits += hull.contained;
      ell_hits += ell.contained;
      hv += hull.volume;
      ev += ell.volume;
    }
    if (hv > ev) ++volume_violations;
    const double gap = (hull_hits - ell_hits) / static_cast<double>(steps);
    worst_cov_gap = std::max(worst_cov_gap, gap);
    hull_cov += hull_hits / static_cast<double>(steps) / trials;
    ell_cov += ell_hits / static_cast<double>(steps) / trials;
    hull_size += hv / steps / trials;
    ell_size += ev / steps / trials;
  }
  pass = volume_violations == 0 && worst_cov_gap <= 0.005;
  Report(7, pass,
         Fmt("p=2, %d trials: hull cov %.4f size %.4f vs ellipsoid cov %.4f size %.4f; "
             "trials with hull volume > ellipsoid %d; worst per-trial hull-minus-ellipsoid "
             "coverage %.4f (<= 0.005)",
             trials, hull_cov, hull_size, ell_cov, ell_size, volume_violations, worst_cov_gap));
}

void Criterion8() {
  // T is the calibration window; the forecaster is fit on another T rows.
  auto gap_for = [](int window, std::uint64_t seed) {
    auto spec = MakeArSpec(2, 5, kSeed);
    spec.seed = seed;
    const int w = 5;
    const int test = 2000;
    const auto series = Simulate(spec, 2 * window + w + test);
    SplitConfig split;
    split.lags.lag_order = w;
    split.train_size = 2 * window + w;
    const auto prepared = PrepareSeries(series, split);
    SpciConfig cfg;
    cfg.alpha = kAlpha;
    cfg.quantile.refit_stride = 10;
    cfg.quantile.qrf.rng_seed = seed;
    const auto reports = RunSpci(prepared, cfg);
    int hits = 0;
    for (const auto& r : reports) hits += r.contained;
    return std::abs(hits / static_cast<double>(reports.size()) - (1.0 - kAlpha));
  };
  double small = 0.0, large = 0.0;
  const int seeds = 10;
  for (int s = 0; s < seeds; ++s) {
    small += gap_for(500, kSeed + s) / seeds;
    large += gap_for(8000, kSeed + s) / seeds;
  }
  Report(8, large <= small + 0.005,
         Fmt("mean |coverage - 0.9| at T=500: %.4f, at T=8000: %.4f (need T=8000 <= T=500 + 0.005)",
             small, large));
}

void Criterion9() {
  const fs::path dir = fs::temp_directory_path() / "ellipsoid_cp_acceptance_csv";
  fs::remove_all(dir);
  fs::create_directories(dir);
  // A user-style CSV: timestamp column, two series, a few missing cells.
  auto spec = MakeVarSpec(2, 3, kSeed + 99);
  const auto series = Simulate(spec, 3000);
  {
    std::ofstream out(dir / "data.csv");
    out << "timestamp,site_a,site_b,unused\n";
    for (Eigen::Index t = 0; t < series.length(); ++t) {
      out << "2024-01-01T" << t << ',';
      out << (t % 997 == 500 ? std::string("NaN") : FormatDouble(series.values(t, 0))) << ',';
      out << (t % 1013 == 700 ? std::string("") : FormatDouble(series.values(t, 1))) << ",x\n";
    }
  }
  std::ofstream(dir / "config.json") << R"({
    "data": {"csv": {"path": ")" << (dir / "data.csv").string() << R"(", "columns": ["site_a", "site_b"]}},
    "methods": ["multidim_spci"],
    "alpha": 0.1,
    "seed": 2024,
    "output_dir": ")" << (dir / "out").string() << R"("
  })";
  const auto cfg = LoadExperimentConfig(dir / "config.json");
  const auto result = RunExperiment(cfg);
  WriteExperimentOutputs(result, cfg.output_dir);
  const double coverage = result.summary.front().coverage_mean;
  std::ifstream rolling(cfg.output_dir / "rolling.csv");
  std::string header, line;
  std::getline(rolling, header);
  int rows = 0;
  bool values_ok = true;
  while (std::getline(rolling, line)) {
    ++rows;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    values_ok = values_ok && cells.size() == 5 && Within(std::stod(cells[3]), 0.0, 1.0) &&
                std::stod(cells[4]) >= 0.0;
  }
  const int expected_rows =
      static_cast<int>(result.trials.front().reports.size()) - cfg.rolling_window + 1;
  const bool pass = coverage >= 1.0 - kAlpha - 0.03 &&
                    header == "trial,step,method,rolling_coverage,rolling_size" &&
                    rows == expected_rows && values_ok;
  Report(9, pass,
         Fmt("CSV pipeline p=2: coverage %.4f (>= %.2f), rolling.csv rows %d (expected %d), "
             "header %s",
             coverage, 1.0 - kAlpha - 0.03, rows, expected_rows, header.c_str()));
}

void Criterion10() {
  const std::string again = SummaryJson(RunExperiment(DeskConfig(ProcessKind::kAr, 2)));
  Report(10, !criterion1_p2_summary.empty() && again == criterion1_p2_summary,
         Fmt("rerun of the p=2 AR configuration: summary.json %s (%zu bytes)",
             again == criterion1_p2_summary ? "byte-identical" : "differs", again.size()));
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<void()>>> criteria = {
      {1, Criterion1}, {2, Criterion2}, {3, Criterion3}, {4, Criterion4}, {5, Criterion5},
      {6, Criterion6}, {7, Criterion7}, {8, Criterion8}, {9, Criterion9}, {10, Criterion10},
  };
  for (const auto& [id, fn] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    try {
      fn();
    } catch (const std::exception& e) {
      Report(id, false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("  (criterion %d took %.1f s)\n", id, secs);
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
