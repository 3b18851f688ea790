#pragma once

#include <vector>

#include "pep/local_function.hpp"
#include "pep/rate_spec.hpp"

namespace pep {

struct PhiDerivatives {
  double first;
  double second;
};

struct Coefficients {
  double chi;
  double D;          // c(kappa) Phi_c'(rho) / 2
  double Lambda;     // (alpha/2) Phi_r''(rho)
  double v_tilde;    // alpha0 Phi_r(rho)
  double v_n;        // alpha n^{3/2} Phi_r'(rho)
  double qv_limit;   // Phi_r(rho)
  double phi_c;
  double phi_r;
};

/// Thermodynamics of the product measures nu_rho built from the normalized spec.
///
/// Single-site marginal: P(m) = lambda^m / (c!(m) d!(kappa-m) Z_lambda).
/// Every rho-indexed quantity first inverts the fugacity with solve_lambda.
class ThermoProfile {
 public:
  explicit ThermoProfile(const RateSpec& spec);

  const RateSpec& spec() const noexcept { return spec_; }
  int kappa() const noexcept { return spec_.kappa(); }
  bool gradient() const noexcept { return gradient_; }

  double log_partition(double lambda) const;
  double partition_function(double lambda) const;
  std::vector<double> marginal(double lambda) const;
  double mean_at(double lambda) const;

  /// lambda with |E[eta_0] - rho| <= 1e-12. Throws std::domain_error outside (0, kappa).
  double solve_lambda(double rho) const;

  /// nu_rho single-site marginal.
  std::vector<double> marginal_at_density(double rho) const;

  double compressibility(double rho) const;

  double phi(const LocalFunction& f, double rho) const;
  /// Phi' from Cov(f, N_k) / chi; Phi'' from the exact second cumulant identity.
  PhiDerivatives phi_derivatives(const LocalFunction& f, double rho) const;
  /// Phi'' by a Richardson-extrapolated central difference of the analytic Phi' (h = 1e-4).
  double phi_second_derivative_numeric(const LocalFunction& f, double rho) const;

  /// Gradient specs only (NonGradientError otherwise).
  Coefficients coefficients(double rho, double alpha, int n, double alpha0 = 0.0) const;
  double einstein_residual(double rho) const;

  LocalFunction c_function() const;
  LocalFunction rate_function() const;

 private:
  struct Moments {
    double mean;
    double var;
    double third;
  };
  Moments single_site_moments(const std::vector<double>& p) const;
  void require_interior(double rho) const;
  void require_gradient(const char* what) const;

  RateSpec spec_;
  bool gradient_;
  std::vector<double> log_c_fact_;
  std::vector<double> log_d_fact_;
};

}  // namespace pep
