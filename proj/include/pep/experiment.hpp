#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pep/gradient.hpp"
#include "pep/oracle.hpp"
#include "pep/rate_spec.hpp"
#include "pep/test_function.hpp"

namespace pep {

struct TestFunctionConfig {
  std::string type = "cos";  // cos | sin | bump
  int k = 1;
  double center = 0.0;
  double sigma = 0.1;

  TestFunction build(double M) const;
};

struct ClassifyConfig {
  double p = 0.7;
  std::vector<int> ring_sizes{3, 4, 5};
  std::size_t state_budget = kDefaultStateBudget;
};

struct OracleConfig {
  double p = 0.7;
  int L = 4;
  int gap_length = 4;  // open segment used for the spectral gap; 0 disables
  std::size_t state_budget = kDefaultStateBudget;
};

struct ThermoTableConfig {
  double rho_min = -1.0;  // defaults to kappa / 20
  double rho_max = -1.0;  // defaults to kappa - kappa / 20
  int points = 19;
  double alpha = 1.0;
  double alpha0 = 1.0;
  int n = 1;
};

struct SimulationConfig {
  std::vector<int> n{64};
  double alpha = 1.0;
  double rho = 0.5;
  std::vector<double> torus_lengths{2.0, 4.0};
  double T = 0.1;
  int frames = 5;
  std::size_t replicas = 100;
  bool jump_log = false;
};

struct BgScanConfig {
  std::vector<std::size_t> ells{1, 2, 3, 4, 6, 8, 12, 16, 24, 32};
  std::string f = "V";
};

struct EnergyConfig {
  std::vector<double> eps{0.25, 0.125, 0.0625};  // strictly decreasing
  double delta_ratio = 0.0;  // 0: pair consecutive eps values; else delta = ratio * eps
  double s = 0.0;
  double t = 0.5;
};

struct ExperimentPlan {
  RateSpec spec = RateSpec::sep(1);
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0 = hardware concurrency
  ClassifyConfig classify;
  OracleConfig oracle;
  ThermoTableConfig thermo_table;
  SimulationConfig simulation;
  std::vector<TestFunctionConfig> test_functions{TestFunctionConfig{}};
  BgScanConfig bg_scan;
  EnergyConfig energy;
  std::string source;  // raw config text (hashed into the manifest)
};

/// Parses and eagerly validates a JSON config. Throws ConfigError with the key path.
ExperimentPlan parse_config_text(const std::string& text);
ExperimentPlan parse_config(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& bytes);

/// One CSV row of an estimator table.
struct EstimatorRow {
  int n;
  std::size_t N;
  double rho;
  double alpha;
  std::string phi_id;
  double ell_or_eps;
  double t;
  double mean;
  double stderr_;
  std::size_t replicas;
};

/// Ensemble of stationary replicas on one (n, M).
struct EnsembleSetup {
  RateSpec spec = RateSpec::sep(1);
  int n = 64;
  double M = 2.0;
  double alpha = 1.0;
  double rho = 0.5;
  double T = 0.1;
  std::vector<double> times;
  std::size_t replicas = 100;
  std::uint64_t seed = 1;
  unsigned threads = 1;

  std::size_t N() const;
  AsymmetryParams asym() const { return AsymmetryParams::sbe(n, alpha); }
  /// alpha n^{3/2} Phi_r'(rho).
  double velocity() const;
};

/// Per test function and frame: mean and stderr of X_t(phi)^2 (an unbiased variance estimate).
std::vector<EstimatorRow> field_variance_scan(const EnsembleSetup& setup, const std::vector<TestFunction>& phis);
/// Per test function and frame t > 0: <M(phi)>_t / t.
std::vector<EstimatorRow> qv_scan(const EnsembleSetup& setup, const std::vector<TestFunction>& phis);
/// Per ell and frame: second moment of the BG2 integral for f = V-bar.
std::vector<EstimatorRow> bg2_scan(const EnsembleSetup& setup, const TestFunction& phi,
                                   const std::vector<std::size_t>& ells);
/// (eps, delta) pairs: consecutive entries of a strictly decreasing list when ratio is 0,
/// otherwise (eps, ratio * eps) for every entry.
std::vector<std::pair<double, double>> energy_pairs(const std::vector<double>& eps, double delta_ratio);

/// Per pair and frame in (s, t]: E[(A^eps_{s,r} - A^delta_{s,r})^2], ell_or_eps = eps.
/// s and t must be frame times.
std::vector<EstimatorRow> energy_scan(const EnsembleSetup& setup, const TestFunction& phi,
                                      const std::vector<double>& eps, double delta_ratio, double s, double t);

/// Observation grid T i / frames, i = 0..frames, merged with extra times.
std::vector<double> observation_grid(double T, int frames, const std::vector<double>& extra = {});

/// Runs a subcommand, writing its outputs and manifest.json under out_dir.
/// Subcommands: classify, oracle, thermo-table, simulate, bg-scan, qv-check, energy-check.
void run_experiment(const std::string& subcommand, const ExperimentPlan& plan, const std::filesystem::path& out_dir);

}  // namespace pep
