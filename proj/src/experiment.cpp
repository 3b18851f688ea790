#include "pep/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "pep/errors.hpp"
#include "pep/fluctuation.hpp"
#include "pep/kmc.hpp"
#include "pep/replicas.hpp"
#include "pep/thermo.hpp"

#ifndef PEP_LAB_VERSION
#define PEP_LAB_VERSION "unknown"
#endif

namespace pep {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Reads one JSON object, remembers which keys were consumed, and rejects the rest.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
  }

  std::string key_path(const std::string& key) const { return path_ + "/" + key; }
  bool has(const std::string& key) const { return node_.contains(key); }

  const json* take(const std::string& key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  double number(const std::string& key, double fallback) {
    const json* v = take(key);
    if (!v) return fallback;
    if (!v->is_number()) throw ConfigError(key_path(key), "expected a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) throw ConfigError(key_path(key), "must be finite");
    return x;
  }

  long long integer(const std::string& key, long long fallback) {
    const json* v = take(key);
    if (!v) return fallback;
    return as_integer(*v, key_path(key));
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    const json* v = take(key);
    if (!v) return fallback;
    if (!v->is_number_unsigned()) throw ConfigError(key_path(key), "expected a non-negative integer");
    return v->get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = take(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(key_path(key), "expected true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = take(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(key_path(key), "expected a string");
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    const json* v = take(key);
    if (!v) return fallback;
    if (!v->is_array()) throw ConfigError(key_path(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const json& e = (*v)[i];
      if (!e.is_number()) throw ConfigError(key_path(key) + "/" + std::to_string(i), "expected a number");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<long long> integers(const std::string& key, std::vector<long long> fallback) {
    const json* v = take(key);
    if (!v) return fallback;
    if (!v->is_array()) throw ConfigError(key_path(key), "expected an array of integers");
    std::vector<long long> out;
    for (std::size_t i = 0; i < v->size(); ++i) out.push_back(as_integer((*v)[i], key_path(key) + "/" + std::to_string(i)));
    return out;
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(key_path(it.key()), "unknown key");
    }
  }

 private:
  static long long as_integer(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
    return v.get<long long>();
  }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

RateSpec parse_rates(const json& node) {
  Section s(node, "/rates");
  const std::string family = s.string("family", "custom");
  const bool has_kappa = s.has("kappa");
  const long long kappa = s.integer("kappa", -1);
  if (has_kappa && (kappa < 1 || kappa > 255)) throw ConfigError("/rates/kappa", "kappa must lie in [1, 255]");
  try {
    if (family == "custom") {
      if (!has_kappa) throw ConfigError("/rates/kappa", "missing required key");
      if (!s.has("c")) throw ConfigError("/rates/c", "missing required key");
      if (!s.has("d")) throw ConfigError("/rates/d", "missing required key");
      auto c = s.numbers("c", {});
      auto d = s.numbers("d", {});
      s.finish();
      return RateSpec(static_cast<int>(kappa), std::move(c), std::move(d));
    }
    if (family == "gradient") {
      if (!s.has("c")) throw ConfigError("/rates/c", "missing required key");
      auto c = s.numbers("c", {});
      s.finish();
      if (has_kappa && c.size() != static_cast<std::size_t>(kappa) + 1) {
        throw ConfigError("c", "c must have length kappa+1");
      }
      return RateSpec::gradient_from_c(std::move(c));
    }
    if (!has_kappa) throw ConfigError("/rates/kappa", "missing required key");
    if (family == "sep") {
      s.finish();
      return RateSpec::sep(static_cast<int>(kappa));
    }
    if (family == "indicator") {
      s.finish();
      return RateSpec::indicator(static_cast<int>(kappa));
    }
    if (family == "interpolated") {
      const double theta = s.number("theta", 0.5);
      s.finish();
      if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("theta", "theta must lie in [0, 1]");
      return RateSpec::interpolated(static_cast<int>(kappa), theta);
    }
  } catch (const ConfigError& e) {
    if (!e.key_path().empty() && e.key_path().front() == '/') throw;
    const std::string what = e.what();
    const std::string prefix = e.key_path() + ": ";
    throw ConfigError("/rates/" + e.key_path(), what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what);
  }
  throw ConfigError("/rates/family", "unknown family '" + family + "' (custom, sep, indicator, interpolated, gradient)");
}

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path, what);
}

std::size_t lattice_size(int n, double M, const std::string& path) {
  const double raw = M * n;
  const double rounded = std::round(raw);
  require(std::abs(raw - rounded) <= 1e-9 * std::max(1.0, raw), path, "torus length times n must be an integer");
  require(rounded >= 2.0, path, "ring size M n must be at least 2");
  return static_cast<std::size_t>(rounded);
}

std::size_t lattice_count(double eps, int n, const std::string& path, const char* what) {
  const double raw = eps * n;
  const double rounded = std::round(raw);
  require(std::abs(raw - rounded) <= 1e-9 * std::max(1.0, raw) && rounded >= 1.0, path,
          std::string(what) + " times n must be a positive integer for every n");
  return static_cast<std::size_t>(rounded);
}

double drift_velocity(const RateSpec& spec, int n, double alpha, double rho) {
  const ThermoProfile thermo(spec);
  double slope = thermo.phi_derivatives(thermo.rate_function(), rho).first;
  // Rounding noise at a symmetric point must not switch on the moving frame.
  if (std::abs(slope) <= 1e-13 * std::max(1.0, thermo.phi(thermo.rate_function(), rho))) slope = 0.0;
  return alpha * std::pow(static_cast<double>(n), 1.5) * slope;
}

// Cross-section checks that depend on the simulation grid.
void validate_grid(const ExperimentPlan& plan, bool check_bg, bool check_energy) {
  const SimulationConfig& sim = plan.simulation;
  for (const int n : sim.n) {
    const bool moving = drift_velocity(plan.spec, n, sim.alpha, sim.rho) != 0.0;
    for (std::size_t j = 0; j < sim.torus_lengths.size(); ++j) {
      const double M = sim.torus_lengths[j];
      const std::size_t N = lattice_size(n, M, "/simulation/torus_lengths/" + std::to_string(j));
      for (std::size_t i = 0; i < plan.test_functions.size(); ++i) {
        const std::string path = "/test_functions/" + std::to_string(i);
        const TestFunctionConfig& tf = plan.test_functions[i];
        if (tf.type == "bump") {
          require(tf.sigma <= M / 12.0, path + "/sigma", "bump width must be at most M/12 for every torus length");
          require(!moving, path + "/type", "bump test functions need a zero drift velocity (use a Fourier mode)");
        }
      }
      if (check_bg) {
        for (std::size_t i = 0; i < plan.bg_scan.ells.size(); ++i) {
          require(plan.bg_scan.ells[i] <= N, "/bg_scan/ells/" + std::to_string(i), "ell must satisfy 1 <= ell <= N");
        }
      }
      if (check_energy) {
        for (std::size_t i = 0; i < plan.energy.eps.size(); ++i) {
          const std::string path = "/energy/eps/" + std::to_string(i);
          const double eps = plan.energy.eps[i];
          require(lattice_count(eps, n, path, "eps") <= N, path, "eps n must not exceed N");
          if (plan.energy.delta_ratio > 0.0) lattice_count(eps * plan.energy.delta_ratio, n, path, "eps * delta_ratio");
        }
      }
    }
  }
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// CSV writer: manifest reference line, header, rows.
class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_ << "# manifest: manifest.json\n";
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

const std::vector<std::string> kEstimatorHeader{"n", "N", "rho", "alpha", "phi_id", "ell_or_eps",
                                                "t", "mean", "stderr", "replicas"};

void write_estimators(const std::filesystem::path& path, const std::vector<EstimatorRow>& rows) {
  CsvFile csv(path, kEstimatorHeader);
  for (const auto& r : rows) {
    csv.row({std::to_string(r.n), std::to_string(r.N), fmt(r.rho), fmt(r.alpha), r.phi_id, fmt(r.ell_or_eps), fmt(r.t),
             fmt(r.mean), fmt(r.stderr_), std::to_string(r.replicas)});
  }
}

std::uint64_t derive_seed(std::uint64_t seed, int n, std::size_t N) {
  std::uint64_t state = seed ^ (static_cast<std::uint64_t>(n) << 32) ^ static_cast<std::uint64_t>(N);
  return splitmix64(state);
}

SimulationPlan base_plan(const EnsembleSetup& setup) {
  SimulationPlan plan;
  plan.spec = setup.spec;
  plan.asym = setup.asym();
  plan.N = setup.N();
  plan.rho = setup.rho;
  plan.T = setup.T;
  plan.observation_times = setup.times;
  plan.seed = setup.seed;
  plan.keep_configurations = false;
  plan.validate();
  return plan;
}

EstimatorRow make_row(const EnsembleSetup& setup, const std::string& phi_id, double ell_or_eps, double t,
                      const FieldStatistic& stat) {
  return {setup.n, setup.N(), setup.rho, setup.alpha, phi_id, ell_or_eps, t, stat.mean(), stat.stderr_mean(),
          stat.count()};
}

std::size_t frame_index(const std::vector<double>& times, double t) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (std::abs(times[i] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return i;
  }
  throw std::invalid_argument("time " + fmt(t) + " is not on the observation grid");
}

struct Ensemble {
  int n;
  double M;
  EnsembleSetup setup;
};

std::vector<Ensemble> ensembles(const ExperimentPlan& plan, const std::vector<double>& extra_times) {
  const SimulationConfig& sim = plan.simulation;
  std::vector<Ensemble> out;
  for (const int n : sim.n) {
    for (const double M : sim.torus_lengths) {
      EnsembleSetup s;
      s.spec = plan.spec;
      s.n = n;
      s.M = M;
      s.alpha = sim.alpha;
      s.rho = sim.rho;
      s.T = sim.T;
      s.times = observation_grid(sim.T, sim.frames, extra_times);
      s.replicas = sim.replicas;
      s.seed = derive_seed(plan.seed, n, s.N());
      s.threads = plan.threads == 0 ? default_threads() : plan.threads;
      out.push_back({n, M, s});
    }
  }
  return out;
}

std::vector<TestFunction> build_functions(const ExperimentPlan& plan, double M) {
  std::vector<TestFunction> out;
  for (const auto& tf : plan.test_functions) out.push_back(tf.build(M));
  return out;
}

void write_json(const std::filesystem::path& path, const ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<std::string> run_classify(const ExperimentPlan& plan, const std::filesystem::path& dir) {
  ClassifyOptions options;
  options.p = plan.classify.p;
  options.ring_sizes = plan.classify.ring_sizes;
  options.state_budget = plan.classify.state_budget;
  const ClassificationReport report = classify(plan.spec, options);

  ordered_json j;
  j["closed_form"] = report.closed_form.gradient;
  if (!report.closed_form.gradient) {
    j["closed_form_witness"] = {{"m", report.closed_form.violating_m},
                                {"d_kappa_minus_m", report.closed_form.lhs},
                                {"c_kappa_minus_c_m", report.closed_form.rhs}};
  }
  j["h"] = report.h ? ordered_json(*report.h) : ordered_json(nullptr);
  if (report.oracle_skipped) {
    j["oracle"] = "skipped";
  } else {
    ordered_json sizes = ordered_json::array();
    ordered_json residuals = ordered_json::array();
    for (const auto& v : report.oracle) {
      sizes.push_back(v.ring_size);
      residuals.push_back(v.sector_residuals);
    }
    j["oracle"] = {{"L", sizes}, {"sector_residuals", residuals}, {"invariant", report.oracle_invariant}};
  }
  j["p"] = options.p;
  j["verdict"] = report.verdict;
  if (!report.note.empty()) j["note"] = report.note;
  write_json(dir / "classify.json", j);
  return {"classify.json"};
}

std::vector<std::string> run_oracle(const ExperimentPlan& plan, const std::filesystem::path& dir) {
  const OracleConfig& cfg = plan.oracle;
  const auto rows = stationarity_residual(plan.spec, AsymmetryParams::fixed(cfg.p), cfg.L, cfg.state_budget);
  CsvFile csv(dir / "oracle.csv", {"K", "state_count", "residual", "gap"});
  for (const auto& r : rows) {
    std::string gap;
    if (cfg.gap_length > 0 && r.K <= plan.spec.kappa() * cfg.gap_length) {
      if (const auto g = spectral_gap(plan.spec, cfg.gap_length, r.K)) gap = fmt(*g);
    }
    csv.row({std::to_string(r.K), std::to_string(r.state_count), fmt(r.residual), gap});
  }
  ordered_json summary;
  summary["L"] = cfg.L;
  summary["p"] = cfg.p;
  summary["gap_length"] = cfg.gap_length;
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, r.residual);
  summary["max_residual"] = worst;
  summary["detailed_balance_residual_symmetric"] =
      detailed_balance_residual(plan.spec, AsymmetryParams::fixed(0.5), cfg.L, cfg.state_budget);
  write_json(dir / "oracle_summary.json", summary);
  return {"oracle.csv", "oracle_summary.json"};
}

std::vector<std::string> run_thermo_table(const ExperimentPlan& plan, const std::filesystem::path& dir) {
  const ThermoTableConfig& cfg = plan.thermo_table;
  const ThermoProfile thermo(plan.spec);
  const double kappa = plan.spec.kappa();
  const double lo = cfg.rho_min < 0.0 ? kappa / 20.0 : cfg.rho_min;
  const double hi = cfg.rho_max < 0.0 ? kappa - kappa / 20.0 : cfg.rho_max;
  CsvFile csv(dir / "thermo_table.csv",
              {"rho", "lambda", "chi", "phi_c", "phi_r", "D", "Lambda", "v_tilde", "v_n", "einstein_residual"});
  const LocalFunction cf = thermo.c_function();
  const LocalFunction rf = thermo.rate_function();
  for (int i = 0; i < cfg.points; ++i) {
    const double rho = cfg.points == 1 ? lo : lo + (hi - lo) * i / (cfg.points - 1);
    const double lambda = thermo.solve_lambda(rho);
    if (thermo.gradient()) {
      const Coefficients co = thermo.coefficients(rho, cfg.alpha, cfg.n, cfg.alpha0);
      csv.row({fmt(rho), fmt(lambda), fmt(co.chi), fmt(co.phi_c), fmt(co.phi_r), fmt(co.D), fmt(co.Lambda),
               fmt(co.v_tilde), fmt(co.v_n), fmt(thermo.einstein_residual(rho))});
    } else {
      // Transport coefficients are undefined off the gradient family.
      csv.row({fmt(rho), fmt(lambda), fmt(thermo.compressibility(rho)), fmt(thermo.phi(cf, rho)),
               fmt(thermo.phi(rf, rho)), "", "", "", "", ""});
    }
  }
  return {"thermo_table.csv"};
}

void write_reference(const std::filesystem::path& path, const ExperimentPlan& plan,
                     const std::vector<Ensemble>& runs) {
  const ThermoProfile thermo(plan.spec);
  const double chi = thermo.compressibility(plan.simulation.rho);
  const double phi_r = thermo.phi(thermo.rate_function(), plan.simulation.rho);
  CsvFile csv(path, {"n", "N", "phi_id", "quantity", "value"});
  for (const auto& run : runs) {
    for (const auto& phi : build_functions(plan, run.M)) {
      const std::string n = std::to_string(run.n);
      const std::string N = std::to_string(run.setup.N());
      csv.row({n, N, phi.id(), "field_variance_limit", fmt(chi * phi.norm2())});
      csv.row({n, N, phi.id(), "qv_limit", fmt(phi_r * phi.grad_norm2())});
      csv.row({n, N, phi.id(), "velocity", fmt(run.setup.velocity())});
    }
  }
}

std::vector<std::string> run_simulate(const ExperimentPlan& plan, const std::filesystem::path& dir) {
  validate_grid(plan, false, false);
  const auto runs = ensembles(plan, {});
  std::vector<EstimatorRow> variance;
  std::vector<std::string> outputs{"frames.csv", "field_variance.csv", "reference.csv"};
  CsvFile frames(dir / "frames.csv", {"n", "N", "replica", "t", "x", "eta"});
  for (const auto& run : runs) {
    const auto phis = build_functions(plan, run.M);
    const auto rows = field_variance_scan(run.setup, phis);
    variance.insert(variance.end(), rows.begin(), rows.end());

    // Replica 0 again, with configurations and the jump log kept.
    SimulationPlan sp = base_plan(run.setup);
    sp.keep_configurations = true;
    sp.keep_jumps = plan.simulation.jump_log;
    const Trajectory traj = pep::run(sp);
    const std::string n = std::to_string(run.n);
    const std::string N = std::to_string(sp.N);
    for (const auto& frame : traj.frames) {
      for (std::size_t x = 0; x < frame.eta.size(); ++x) {
        frames.row({n, N, "0", fmt(frame.t), std::to_string(x), std::to_string(frame.eta[x])});
      }
    }
    if (plan.simulation.jump_log) {
      const std::string name = "jumps_n" + n + "_N" + N + ".csv";
      CsvFile jumps(dir / name, {"t", "bond", "dir"});
      for (const auto& j : traj.jumps) jumps.row({fmt(j.t), std::to_string(j.bond), std::to_string(int(j.dir))});
      outputs.push_back(name);
    }
  }
  write_estimators(dir / "field_variance.csv", variance);
  write_reference(dir / "reference.csv", plan, runs);
  return outputs;
}

std::vector<std::string> run_qv(const ExperimentPlan& plan, const std::filesystem::path& dir) {
  validate_grid(plan, false, false);
  const auto runs = ensembles(plan, {});
  std::vector<EstimatorRow> rows;
  for (const auto& run : runs) {
    const auto r = qv_scan(run.setup, build_functions(plan, run.M));
    rows.insert(rows.end(), r.begin(), r.end());
  }
  write_estimators(dir / "qv.csv", rows);
  write_reference(dir / "reference.csv", plan, runs);
  return {"qv.csv", "reference.csv"};
}

std::vector<std::string> run_bg(const ExperimentPlan& plan, const std::filesystem::path& dir) {
  if (plan.bg_scan.f != "V") throw ConfigError("/bg_scan/f", "only f = \"V\" is supported");
  const ThermoProfile thermo(plan.spec);
  if (!thermo.gradient()) throw NonGradientError("bg-scan: the nonlinearity V is only defined for gradient specs");
  validate_grid(plan, true, false);
  std::vector<EstimatorRow> rows;
  for (const auto& run : ensembles(plan, {})) {
    for (const auto& phi : build_functions(plan, run.M)) {
      const auto r = bg2_scan(run.setup, phi, plan.bg_scan.ells);
      rows.insert(rows.end(), r.begin(), r.end());
    }
  }
  write_estimators(dir / "bg_scan.csv", rows);
  return {"bg_scan.csv"};
}

std::vector<std::string> run_energy(const ExperimentPlan& plan, const std::filesystem::path& dir) {
  validate_grid(plan, false, true);
  const EnergyConfig& cfg = plan.energy;
  std::vector<EstimatorRow> rows;
  CsvFile fit(dir / "energy_fit.csv", {"n", "N", "phi_id", "eps", "delta", "t_minus_s", "K", "K_stderr"});
  const auto pairs = energy_pairs(cfg.eps, cfg.delta_ratio);
  for (const auto& run : ensembles(plan, {cfg.s, cfg.t})) {
    const double t_end = run.setup.times[frame_index(run.setup.times, cfg.t)];
    for (const auto& phi : build_functions(plan, run.M)) {
      const auto r = energy_scan(run.setup, phi, cfg.eps, cfg.delta_ratio, cfg.s, cfg.t);
      for (const auto& [eps, delta] : pairs) {
        for (const auto& row : r) {
          if (row.t != t_end || row.ell_or_eps != eps) continue;
          const double scale = eps * (cfg.t - cfg.s) * phi.grad_norm2();
          fit.row({std::to_string(run.n), std::to_string(run.setup.N()), phi.id(), fmt(eps), fmt(delta),
                   fmt(cfg.t - cfg.s), fmt(row.mean / scale), fmt(row.stderr_ / scale)});
        }
      }
      rows.insert(rows.end(), r.begin(), r.end());
    }
  }
  write_estimators(dir / "energy.csv", rows);
  return {"energy.csv", "energy_fit.csv"};
}

}  // namespace

TestFunction TestFunctionConfig::build(double M) const {
  if (type == "cos") return TestFunction::fourier(k, false, M);
  if (type == "sin") return TestFunction::fourier(k, true, M);
  return TestFunction::bump(center * M, sigma, M);
}

ExperimentPlan parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  Section top(root, "");
  ExperimentPlan plan;
  plan.source = text;

  const json* rates = top.take("rates");
  if (!rates) throw ConfigError("/rates", "missing required key");
  plan.spec = parse_rates(*rates);
  const double kappa = plan.spec.kappa();

  plan.seed = top.unsigned_integer("seed", 1);
  const long long threads = top.integer("threads", 0);
  require(threads >= 0 && threads <= 1024, "/threads", "threads must lie in [0, 1024] (0 = all cores)");
  plan.threads = static_cast<unsigned>(threads);

  if (const json* node = top.take("classify")) {
    Section s(*node, "/classify");
    auto& c = plan.classify;
    c.p = s.number("p", c.p);
    require(c.p > 0.0 && c.p < 1.0 && c.p != 0.5, "/classify/p", "p must lie in (0, 1) and differ from 1/2");
    std::vector<long long> sizes = s.integers("ring_sizes", {3, 4, 5});
    require(!sizes.empty(), "/classify/ring_sizes", "need at least one ring size");
    c.ring_sizes.clear();
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      require(sizes[i] >= 2 && sizes[i] <= 64, "/classify/ring_sizes/" + std::to_string(i),
              "ring size must lie in [2, 64]");
      c.ring_sizes.push_back(static_cast<int>(sizes[i]));
    }
    c.state_budget = s.unsigned_integer("state_budget", c.state_budget);
    require(c.state_budget > 0, "/classify/state_budget", "state_budget must be positive");
    s.finish();
  }

  if (const json* node = top.take("oracle")) {
    Section s(*node, "/oracle");
    auto& o = plan.oracle;
    o.p = s.number("p", o.p);
    require(o.p >= 0.0 && o.p <= 1.0, "/oracle/p", "p must lie in [0, 1]");
    const long long L = s.integer("L", o.L);
    require(L >= 2 && L <= 64, "/oracle/L", "L must lie in [2, 64]");
    o.L = static_cast<int>(L);
    const long long g = s.integer("gap_length", o.gap_length);
    require(g == 0 || (g >= 2 && g <= 64), "/oracle/gap_length", "gap_length must be 0 or lie in [2, 64]");
    o.gap_length = static_cast<int>(g);
    o.state_budget = s.unsigned_integer("state_budget", o.state_budget);
    require(o.state_budget > 0, "/oracle/state_budget", "state_budget must be positive");
    s.finish();
  }

  if (const json* node = top.take("thermo_table")) {
    Section s(*node, "/thermo_table");
    auto& t = plan.thermo_table;
    t.rho_min = s.number("rho_min", t.rho_min);
    t.rho_max = s.number("rho_max", t.rho_max);
    const long long points = s.integer("points", t.points);
    require(points >= 1 && points <= 100000, "/thermo_table/points", "points must lie in [1, 100000]");
    t.points = static_cast<int>(points);
    t.alpha = s.number("alpha", t.alpha);
    t.alpha0 = s.number("alpha0", t.alpha0);
    const long long n = s.integer("n", t.n);
    require(n >= 1, "/thermo_table/n", "n must be >= 1");
    t.n = static_cast<int>(n);
    s.finish();
    if (s.has("rho_min")) {
      require(t.rho_min > 0.0 && t.rho_min < kappa, "/thermo_table/rho_min", "rho must lie strictly inside (0, kappa)");
    }
    if (s.has("rho_max")) {
      require(t.rho_max > 0.0 && t.rho_max < kappa, "/thermo_table/rho_max", "rho must lie strictly inside (0, kappa)");
    }
    const double lo = t.rho_min < 0.0 ? kappa / 20.0 : t.rho_min;
    const double hi = t.rho_max < 0.0 ? kappa - kappa / 20.0 : t.rho_max;
    require(lo <= hi, "/thermo_table/rho_max", "rho_max must be >= rho_min");
  }

  if (const json* node = top.take("simulation")) {
    Section s(*node, "/simulation");
    auto& sim = plan.simulation;
    const std::vector<long long> ns = s.integers("n", {64});
    require(!ns.empty(), "/simulation/n", "need at least one n");
    sim.n.clear();
    for (std::size_t i = 0; i < ns.size(); ++i) {
      require(ns[i] >= 1 && ns[i] <= (1 << 20), "/simulation/n/" + std::to_string(i), "n must lie in [1, 2^20]");
      sim.n.push_back(static_cast<int>(ns[i]));
    }
    sim.alpha = s.number("alpha", sim.alpha);
    sim.rho = s.number("rho", sim.rho);
    sim.torus_lengths = s.numbers("torus_lengths", sim.torus_lengths);
    require(!sim.torus_lengths.empty(), "/simulation/torus_lengths", "need at least one torus length");
    sim.T = s.number("T", sim.T);
    const long long frames = s.integer("frames", sim.frames);
    require(frames >= 1 && frames <= 100000, "/simulation/frames", "frames must lie in [1, 100000]");
    sim.frames = static_cast<int>(frames);
    const long long replicas = s.integer("replicas", static_cast<long long>(sim.replicas));
    require(replicas >= 1, "/simulation/replicas", "replicas must be >= 1");
    sim.replicas = static_cast<std::size_t>(replicas);
    sim.jump_log = s.boolean("jump_log", sim.jump_log);
    s.finish();
  }
  {
    const auto& sim = plan.simulation;
    require(sim.rho > 0.0 && sim.rho < kappa, "/simulation/rho", "rho must lie strictly inside (0, kappa)");
    require(sim.T > 0.0, "/simulation/T", "T must be > 0");
    for (std::size_t i = 0; i < sim.n.size(); ++i) {
      require(std::abs(sim.alpha) <= std::sqrt(static_cast<double>(sim.n[i])), "/simulation/alpha",
              "need |alpha| / sqrt(n) <= 1 so that p, q lie in [0, 1]");
    }
    for (std::size_t j = 0; j < sim.torus_lengths.size(); ++j) {
      const std::string path = "/simulation/torus_lengths/" + std::to_string(j);
      require(sim.torus_lengths[j] > 0.0, path, "torus length must be > 0");
      for (const int n : sim.n) lattice_size(n, sim.torus_lengths[j], path);
    }
  }

  if (const json* node = top.take("test_functions")) {
    if (!node->is_array() || node->empty()) {
      throw ConfigError("/test_functions", "expected a non-empty array of test functions");
    }
    plan.test_functions.clear();
    for (std::size_t i = 0; i < node->size(); ++i) {
      const std::string path = "/test_functions/" + std::to_string(i);
      Section s((*node)[i], path);
      TestFunctionConfig tf;
      tf.type = s.string("type", tf.type);
      require(tf.type == "cos" || tf.type == "sin" || tf.type == "bump", path + "/type", "type must be cos, sin or bump");
      const long long k = s.integer("k", tf.k);
      require(k >= (tf.type == "sin" ? 1 : 0) && k <= 100000, path + "/k",
              tf.type == "sin" ? "sin modes need k >= 1" : "k must be >= 0");
      tf.k = static_cast<int>(k);
      tf.center = s.number("center", tf.center);
      tf.sigma = s.number("sigma", tf.sigma);
      require(tf.center >= 0.0 && tf.center < 1.0, path + "/center", "center is a fraction of M in [0, 1)");
      require(tf.sigma > 0.0, path + "/sigma", "sigma must be > 0");
      s.finish();
      plan.test_functions.push_back(tf);
    }
  }

  const bool has_bg = top.has("bg_scan");
  if (const json* node = top.take("bg_scan")) {
    Section s(*node, "/bg_scan");
    const std::vector<long long> ells = s.integers("ells", {1, 2, 3, 4, 6, 8, 12, 16, 24, 32});
    require(!ells.empty(), "/bg_scan/ells", "need at least one ell");
    plan.bg_scan.ells.clear();
    for (std::size_t i = 0; i < ells.size(); ++i) {
      require(ells[i] >= 1, "/bg_scan/ells/" + std::to_string(i), "ell must satisfy 1 <= ell <= N");
      plan.bg_scan.ells.push_back(static_cast<std::size_t>(ells[i]));
    }
    plan.bg_scan.f = s.string("f", plan.bg_scan.f);
    require(plan.bg_scan.f == "V", "/bg_scan/f", "only f = \"V\" is supported");
    s.finish();
  }

  const bool has_energy = top.has("energy");
  if (const json* node = top.take("energy")) {
    Section s(*node, "/energy");
    auto& e = plan.energy;
    e.eps = s.numbers("eps", e.eps);
    require(!e.eps.empty(), "/energy/eps", "need at least one eps");
    for (std::size_t i = 0; i < e.eps.size(); ++i) {
      require(e.eps[i] > 0.0, "/energy/eps/" + std::to_string(i), "eps must be > 0");
    }
    e.delta_ratio = s.number("delta_ratio", e.delta_ratio);
    require(e.delta_ratio >= 0.0 && e.delta_ratio < 1.0, "/energy/delta_ratio",
            "delta_ratio must lie in [0, 1) (0 pairs consecutive eps values)");
    if (e.delta_ratio == 0.0) {
      require(e.eps.size() >= 2, "/energy/eps", "consecutive pairing needs at least two eps values");
      for (std::size_t i = 1; i < e.eps.size(); ++i) {
        require(e.eps[i] < e.eps[i - 1], "/energy/eps/" + std::to_string(i), "eps values must be strictly decreasing");
      }
    }
    e.s = s.number("s", e.s);
    e.t = s.number("t", e.t);
    s.finish();
    require(e.s >= 0.0, "/energy/s", "s must be >= 0");
    require(e.t > e.s, "/energy/t", "t must be > s");
    require(e.t <= plan.simulation.T, "/energy/t", "t must not exceed the simulation horizon T");
  }
  top.finish();

  validate_grid(plan, has_bg, has_energy);
  return plan;
}

ExperimentPlan parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::size_t EnsembleSetup::N() const { return lattice_size(n, M, "/simulation/torus_lengths"); }

double EnsembleSetup::velocity() const { return drift_velocity(spec, n, alpha, rho); }

std::vector<double> observation_grid(double T, int frames, const std::vector<double>& extra) {
  if (!(T > 0.0) || frames < 1) throw std::invalid_argument("observation_grid: need T > 0 and frames >= 1");
  std::vector<double> out;
  for (int i = 0; i <= frames; ++i) out.push_back(i == frames ? T : T * i / frames);
  for (double t : extra) {
    if (t < 0.0 || t > T) throw std::invalid_argument("observation_grid: extra time outside [0, T]");
    const bool present = std::any_of(out.begin(), out.end(), [&](double u) { return std::abs(u - t) <= 1e-12 * T; });
    if (!present) out.push_back(t);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<EstimatorRow> field_variance_scan(const EnsembleSetup& setup, const std::vector<TestFunction>& phis) {
  const SimulationPlan plan = base_plan(setup);
  const double v = setup.velocity();
  const auto per_replica = run_replicas(setup.replicas, setup.threads, [&](std::uint64_t id) {
    SimulationPlan p = plan;
    p.replica_id = id;
    FieldObserver obs(phis, setup.n, setup.rho, v);
    run(p, {&obs});
    return obs.values();
  });
  std::vector<EstimatorRow> rows;
  for (std::size_t i = 0; i < phis.size(); ++i) {
    for (std::size_t f = 0; f < setup.times.size(); ++f) {
      FieldStatistic stat;
      for (const auto& r : per_replica) stat.add(r[i][f] * r[i][f]);
      rows.push_back(make_row(setup, phis[i].id(), 0.0, setup.times[f], stat));
    }
  }
  return rows;
}

std::vector<EstimatorRow> qv_scan(const EnsembleSetup& setup, const std::vector<TestFunction>& phis) {
  const SimulationPlan plan = base_plan(setup);
  const double v = setup.velocity();
  const AsymmetryParams asym = setup.asym();
  const auto per_replica = run_replicas(setup.replicas, setup.threads, [&](std::uint64_t id) {
    SimulationPlan p = plan;
    p.replica_id = id;
    std::vector<QvObserver> obs;
    obs.reserve(phis.size());
    for (const auto& phi : phis) obs.emplace_back(setup.spec, asym, phi, v);
    std::vector<SimulationObserver*> ptrs;
    for (auto& o : obs) ptrs.push_back(&o);
    run(p, ptrs);
    std::vector<std::vector<double>> out;
    for (const auto& o : obs) out.push_back(o.values());
    return out;
  });
  std::vector<EstimatorRow> rows;
  for (std::size_t i = 0; i < phis.size(); ++i) {
    for (std::size_t f = 0; f < setup.times.size(); ++f) {
      const double t = setup.times[f];
      if (!(t > 0.0)) continue;
      FieldStatistic stat;
      for (const auto& r : per_replica) stat.add(r[i][f] / t);
      rows.push_back(make_row(setup, phis[i].id(), 0.0, t, stat));
    }
  }
  return rows;
}

std::vector<EstimatorRow> bg2_scan(const EnsembleSetup& setup, const TestFunction& phi,
                                   const std::vector<std::size_t>& ells) {
  const ThermoProfile thermo(setup.spec);
  const LocalFunction f = nonlinear_V(thermo, setup.rho);
  check_bg2_precondition(thermo, f, setup.rho);
  const double second = thermo.phi_derivatives(f, setup.rho).second;
  const SimulationPlan plan = base_plan(setup);
  for (const std::size_t ell : ells) {
    if (ell < 1 || ell > plan.N) throw std::invalid_argument("bg2_scan: ell must satisfy 1 <= ell <= N");
  }
  const double v = setup.velocity();
  const auto per_replica = run_replicas(setup.replicas, setup.threads, [&](std::uint64_t id) {
    SimulationPlan p = plan;
    p.replica_id = id;
    Bg2Observer obs(f, second, setup.rho, phi, setup.n, v, ells);
    run(p, {&obs});
    return obs.values();
  });
  std::vector<EstimatorRow> rows;
  for (std::size_t i = 0; i < ells.size(); ++i) {
    for (std::size_t fr = 0; fr < setup.times.size(); ++fr) {
      if (!(setup.times[fr] > 0.0)) continue;
      FieldStatistic stat;
      for (const auto& r : per_replica) stat.add(r[i][fr] * r[i][fr]);
      rows.push_back(make_row(setup, phi.id(), static_cast<double>(ells[i]), setup.times[fr], stat));
    }
  }
  return rows;
}

std::vector<std::pair<double, double>> energy_pairs(const std::vector<double>& eps, double delta_ratio) {
  if (!(delta_ratio >= 0.0 && delta_ratio < 1.0)) throw std::invalid_argument("energy_pairs: delta_ratio in [0, 1)");
  std::vector<std::pair<double, double>> out;
  if (delta_ratio > 0.0) {
    for (const double e : eps) out.emplace_back(e, e * delta_ratio);
    return out;
  }
  for (std::size_t i = 1; i < eps.size(); ++i) {
    if (!(eps[i] < eps[i - 1])) throw std::invalid_argument("energy_pairs: eps must be strictly decreasing");
    out.emplace_back(eps[i - 1], eps[i]);
  }
  return out;
}

std::vector<EstimatorRow> energy_scan(const EnsembleSetup& setup, const TestFunction& phi,
                                      const std::vector<double>& eps, double delta_ratio, double s, double t) {
  const auto eps_pairs = energy_pairs(eps, delta_ratio);
  const SimulationPlan plan = base_plan(setup);
  const std::size_t is = frame_index(setup.times, s);
  const std::size_t it = frame_index(setup.times, t);
  if (it <= is) throw std::invalid_argument("energy_scan: need s < t");
  std::vector<std::size_t> ells;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  auto slot = [&](std::size_t ell) {
    const auto pos = std::find(ells.begin(), ells.end(), ell);
    if (pos != ells.end()) return static_cast<std::size_t>(pos - ells.begin());
    ells.push_back(ell);
    return ells.size() - 1;
  };
  for (const auto& [e, d] : eps_pairs) {
    const std::size_t a = lattice_count(e, setup.n, "eps", "eps");
    const std::size_t b = lattice_count(d, setup.n, "eps", "delta");
    if (a > plan.N) throw std::invalid_argument("energy_scan: eps n exceeds N");
    pairs.emplace_back(slot(a), slot(b));
  }
  const double v = setup.velocity();
  const auto per_replica = run_replicas(setup.replicas, setup.threads, [&](std::uint64_t id) {
    SimulationPlan p = plan;
    p.replica_id = id;
    EnergyObserver obs(setup.rho, phi, setup.n, v, ells);
    run(p, {&obs});
    return obs.values();
  });
  std::vector<EstimatorRow> rows;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [a, b] = pairs[k];
    for (std::size_t fr = is + 1; fr <= it; ++fr) {
      FieldStatistic stat;
      for (const auto& r : per_replica) {
        const double diff = (r[a][fr] - r[a][is]) - (r[b][fr] - r[b][is]);
        stat.add(diff * diff);
      }
      rows.push_back(make_row(setup, phi.id(), eps_pairs[k].first, setup.times[fr], stat));
    }
  }
  return rows;
}

void run_experiment(const std::string& subcommand, const ExperimentPlan& plan, const std::filesystem::path& out_dir) {
  using Runner = std::vector<std::string> (*)(const ExperimentPlan&, const std::filesystem::path&);
  static const std::map<std::string, Runner> runners{
      {"classify", run_classify}, {"oracle", run_oracle},       {"thermo-table", run_thermo_table},
      {"simulate", run_simulate}, {"bg-scan", run_bg},          {"qv-check", run_qv},
      {"energy-check", run_energy}};
  const auto it = runners.find(subcommand);
  if (it == runners.end()) throw ConfigError("", "unknown subcommand '" + subcommand + "'");
  std::filesystem::create_directories(out_dir);

  ordered_json manifest;
  manifest["tool"] = "pep-lab";
  manifest["version"] = PEP_LAB_VERSION;
  manifest["subcommand"] = subcommand;
  manifest["config_hash"] = "fnv1a64:" + hex64(fnv1a64(plan.source));
  manifest["seed"] = plan.seed;
  manifest["threads"] = plan.threads == 0 ? default_threads() : plan.threads;
  const auto start = std::chrono::steady_clock::now();
  auto seconds = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  try {
    const std::vector<std::string> outputs = it->second(plan, out_dir);
    manifest["status"] = "complete";
    manifest["outputs"] = outputs;
    manifest["wall_time_seconds"] = seconds();
    write_json(out_dir / "manifest.json", manifest);
  } catch (const std::exception& e) {
    manifest["status"] = "incomplete";
    manifest["error"] = e.what();
    manifest["wall_time_seconds"] = seconds();
    write_json(out_dir / "manifest.json", manifest);
    throw;
  }
}

}  // namespace pep
