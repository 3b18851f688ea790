#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pep/kmc.hpp"
#include "pep/local_function.hpp"
#include "pep/site_integral.hpp"
#include "pep/test_function.hpp"
#include "pep/thermo.hpp"

namespace pep {

/// Replica values of one scalar functional.
class FieldStatistic {
 public:
  explicit FieldStatistic(std::string name = {}) : name_(std::move(name)) {}

  void add(double v) { values_.push_back(v); }
  void merge(const FieldStatistic& other) { values_.insert(values_.end(), other.values_.begin(), other.values_.end()); }

  const std::string& name() const noexcept { return name_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t count() const noexcept { return values_.size(); }

  double mean() const;
  /// Unbiased sample variance (0 for fewer than two values).
  double variance() const;
  double stderr_mean() const;

 private:
  std::string name_;
  std::vector<double> values_;
};

/// X = n^{-1/2} sum_x (eta_x - rho) phi(((x - v t) mod N) / n).
double fluctuation_field(const Configuration& eta, const TestFunction& phi, int n, double rho, double v, double t);

/// (1/ell) sum_{y<ell} eta_{x+y} with periodic wrap.
double local_average_field(const Configuration& eta, std::size_t x, std::size_t ell);

/// V-bar = (r01 + r10)/2 - Phi_r'(rho) (eta_0 - rho) - Phi_r(rho). Gradient specs only.
/// Verifies d/dsigma E_sigma[V] = 0 at rho (1e-8) and Phi_V'' = Phi_r'' (1e-6).
LocalFunction nonlinear_V(const ThermoProfile& thermo, double rho);

/// f - Phi_f(rho) - Phi_f'(rho) (eta_0 - rho): the reduction of first-order to second-order BG.
LocalFunction first_order_bg_function(const ThermoProfile& thermo, const LocalFunction& f, double rho);

/// Throws std::invalid_argument unless |Phi_f(rho)| and |Phi_f'(rho)| are <= tol.
void check_bg2_precondition(const ThermoProfile& thermo, const LocalFunction& f, double rho, double tol = 1e-8);

/// Sliding window sums W_x = eta_x + ... + eta_{x+ell-1} on a ring.
class WindowSums {
 public:
  WindowSums() = default;
  WindowSums(const Configuration& eta, std::size_t ell);

  std::size_t ell() const noexcept { return ell_; }
  int sum(std::size_t x) const { return sums_[x]; }
  /// Applies a nearest-neighbour jump; returns the (at most two) windows that changed.
  int update(std::size_t from, std::size_t to, std::size_t changed[2]);

 private:
  std::size_t ell_ = 1;
  std::vector<int> sums_;
};

/// Records the field X^n_t(phi) for each test function at every frame.
class FieldObserver : public SimulationObserver {
 public:
  FieldObserver(std::vector<TestFunction> phis, int n, double rho, double v);
  void on_frame(std::size_t index, double t, const Configuration& eta) override;
  /// values()[phi][frame]
  const std::vector<std::vector<double>>& values() const noexcept { return values_; }

 private:
  std::vector<TestFunction> phis_;
  int n_;
  double rho_;
  double v_;
  std::vector<std::vector<double>> values_;
};

/// Predictable quadratic variation <M(phi)>_t = int_0^t (1/n) sum_x (p r_{x,x+1} + q r_{x+1,x}) (grad^n phi_x(s))^2 ds,
/// integrated exactly between jumps. Value at every frame.
class QvObserver : public SimulationObserver {
 public:
  QvObserver(const RateSpec& spec, const AsymmetryParams& asym, const TestFunction& phi, double v);
  void on_start(const Configuration& eta) override;
  void on_jump(double t, std::size_t from, std::size_t to, const Configuration& eta) override;
  void on_frame(std::size_t index, double t, const Configuration& eta) override;
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  double bond_value(const Configuration& eta, std::size_t x) const;
  RateSpec spec_;
  double p_;
  double q_;
  SiteIntegral integral_;
  std::vector<double> values_;
};

/// Second-order BG integrals int_0^t sum_x (tau_x f - Phi_f''/2 (W^ell_x/ell - rho)^2) phi^n_x(s) ds
/// for several ell at once. Value per (ell, frame).
class Bg2Observer : public SimulationObserver {
 public:
  Bg2Observer(const LocalFunction& f, double phi_f_second, double rho, const TestFunction& phi, int n, double v,
              std::vector<std::size_t> ells);
  void on_start(const Configuration& eta) override;
  void on_jump(double t, std::size_t from, std::size_t to, const Configuration& eta) override;
  void on_frame(std::size_t index, double t, const Configuration& eta) override;
  /// values()[ell index][frame]
  const std::vector<std::vector<double>>& values() const noexcept { return values_; }
  const std::vector<std::size_t>& ells() const noexcept { return ells_; }

 private:
  double window_term(int sum, std::size_t ell) const;
  LocalFunction f_;
  double half_second_;
  double rho_;
  std::vector<std::size_t> ells_;
  SiteIntegral f_integral_;
  std::vector<SiteIntegral> window_integrals_;
  std::vector<WindowSums> windows_;
  std::vector<std::vector<double>> values_;
};

/// I^ell(t) = int_0^t sum_x (W^ell_x/ell - rho)^2 grad^n phi^n_x(s) ds; A^eps_{s,t} = I^{eps n}(t) - I^{eps n}(s).
class EnergyObserver : public SimulationObserver {
 public:
  EnergyObserver(double rho, const TestFunction& phi, int n, double v, std::vector<std::size_t> ells);
  void on_start(const Configuration& eta) override;
  void on_jump(double t, std::size_t from, std::size_t to, const Configuration& eta) override;
  void on_frame(std::size_t index, double t, const Configuration& eta) override;
  /// values()[ell index][frame]
  const std::vector<std::vector<double>>& values() const noexcept { return values_; }

 private:
  double rho_;
  std::vector<std::size_t> ells_;
  std::vector<SiteIntegral> integrals_;
  std::vector<WindowSums> windows_;
  std::vector<std::vector<double>> values_;
};

/// QV replayed from a jump log (requires plan.keep_jumps and the initial state); integrand
/// piecewise constant between logged jumps. Throws std::invalid_argument without jump data.
double martingale_qv(const Trajectory& traj, const RateSpec& spec, const AsymmetryParams& asym,
                     const TestFunction& phi, double v, double t);

/// Trapezoid rule over the stored frames of integrand(eta, t).
double frame_trapezoid(const Trajectory& traj, const std::function<double(const Configuration&, double)>& integrand);

/// sum_x (tau_x f - Phi_f''/2 (eta^ell_x - rho)^2) phi^n_x(t) on one configuration.
double bg2_integrand(const Configuration& eta, const LocalFunction& f, double phi_f_second, double rho,
                     const TestFunction& phi, int n, double v, double t, std::size_t ell);

/// sum_x (eta^ell_x - rho)^2 grad^n phi^n_x(t) on one configuration.
double energy_integrand(const Configuration& eta, double rho, const TestFunction& phi, int n, double v, double t,
                        std::size_t ell);

}  // namespace pep
