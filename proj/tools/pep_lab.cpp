#include <CLI11.hpp>
#include <iostream>

#include "pep/errors.hpp"
#include "pep/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kBudgetExceeded = 3;
constexpr int kInvariantViolation = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pep-lab: partial exclusion process experiments"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  const char* names[][2] = {
      {"classify", "Gradient classification by three independent procedures"},
      {"oracle", "Exact stationarity residuals and spectral gaps by sector"},
      {"thermo-table", "Thermodynamic and transport coefficients on a density grid"},
      {"simulate", "Stationary KMC runs: frames, jump log, field variance"},
      {"bg-scan", "Second-order Boltzmann-Gibbs statistic over window sizes"},
      {"qv-check", "Predictable quadratic variation of the martingale"},
      {"energy-check", "Energy-condition second moments and fitted K"},
  };
  for (const auto& [name, help] : names) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "JSON experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory")->required();
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--threads", threads, "Replica worker threads (0 = all cores)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();

  try {
    pep::ExperimentPlan plan = pep::parse_config(config);
    if (seed) plan.seed = *seed;
    if (threads) plan.threads = *threads;
    pep::run_experiment(subcommand, plan, out);
  } catch (const pep::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const pep::NonGradientError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const pep::BudgetError& e) {
    std::cerr << "budget exceeded: " << e.what() << '\n';
    return kBudgetExceeded;
  } catch (const pep::InvariantError& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kInvariantViolation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kOk;
}
