#pragma once

#include <complex>
#include <vector>

#include "pep/test_function.hpp"

namespace pep {

/// Exact time integral of G(s) = sum_x g_x w_x(s) along a piecewise-constant
/// path g, updated site by site at jump times.
///
/// Static weights: G changes only when g does. Moving weights
/// w_x(s) = Re sum_j a_j e^{i theta_j (x - v s)}: the sums S_j = sum_x g_x e^{i theta_j x}
/// are kept and each e^{-i Omega_j s} factor is integrated in closed form.
class SiteIntegral {
 public:
  SiteIntegral() = default;
  explicit SiteIntegral(std::vector<double> weights);
  SiteIntegral(const TrigSeries& series, std::size_t N, double velocity);

  std::size_t size() const noexcept { return g_.size(); }

  /// Loads g at time t and zeroes the integral.
  void reset(std::vector<double> g, double t);
  /// Integrates up to t (t must not decrease).
  void advance(double t);
  /// g_x := value at the current time.
  void set(std::size_t x, double value);
  /// Recomputes the running sums from g (clears accumulated rounding).
  void resync();

  double integral() const noexcept { return integral_; }
  double g(std::size_t x) const { return g_[x]; }
  /// G at the current time.
  double rate() const;

 private:
  bool moving_ = false;
  std::vector<double> weights_;
  std::vector<double> g_;
  double sum_ = 0.0;

  struct Mode {
    std::complex<double> a;
    double omega;                            // theta v
    std::vector<std::complex<double>> phase;  // e^{i theta x}
    std::complex<double> S;
  };
  std::vector<Mode> modes_;

  double t_ = 0.0;
  double integral_ = 0.0;
};

}  // namespace pep
