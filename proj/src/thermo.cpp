#include "pep/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "pep/errors.hpp"
#include "pep/gradient.hpp"

namespace pep {
namespace {

constexpr double kMeanTolerance = 1e-12;

// Product weights and window particle numbers over {0..kappa}^k.
struct WindowTables {
  std::vector<double> weight;
  std::vector<double> count;
};

WindowTables window_tables(const std::vector<double>& p, int width) {
  WindowTables t{{1.0}, {0.0}};
  const std::size_t base = p.size();
  std::size_t stride = 1;
  for (int j = 0; j < width; ++j) {
    WindowTables next{std::vector<double>(stride * base), std::vector<double>(stride * base)};
    for (std::size_t m = 0; m < base; ++m) {
      for (std::size_t i = 0; i < stride; ++i) {
        next.weight[i + m * stride] = t.weight[i] * p[m];
        next.count[i + m * stride] = t.count[i] + static_cast<double>(m);
      }
    }
    t = std::move(next);
    stride *= base;
  }
  return t;
}

}  // namespace

ThermoProfile::ThermoProfile(const RateSpec& spec)
    : spec_(normalize(spec)), gradient_(check_gradient_closed_form(spec_).gradient) {
  const int kappa = spec_.kappa();
  log_c_fact_.assign(static_cast<std::size_t>(kappa) + 1, 0.0);
  log_d_fact_.assign(static_cast<std::size_t>(kappa) + 1, 0.0);
  for (int m = 1; m <= kappa; ++m) {
    log_c_fact_[static_cast<std::size_t>(m)] = log_c_fact_[static_cast<std::size_t>(m - 1)] + std::log(spec_.c(m));
    log_d_fact_[static_cast<std::size_t>(m)] = log_d_fact_[static_cast<std::size_t>(m - 1)] + std::log(spec_.d(m));
  }
}

double ThermoProfile::log_partition(double lambda) const {
  if (!(lambda > 0.0)) throw std::domain_error("partition function needs lambda > 0");
  const int kappa = spec_.kappa();
  const double log_lambda = std::log(lambda);
  double top = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(static_cast<std::size_t>(kappa) + 1);
  for (int m = 0; m <= kappa; ++m) {
    terms[static_cast<std::size_t>(m)] = m * log_lambda - log_c_fact_[static_cast<std::size_t>(m)] -
                                         log_d_fact_[static_cast<std::size_t>(kappa - m)];
    top = std::max(top, terms[static_cast<std::size_t>(m)]);
  }
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - top);
  return top + std::log(sum);
}

double ThermoProfile::partition_function(double lambda) const {
  if (!(lambda > 0.0)) throw std::domain_error("partition function needs lambda > 0");
  const int kappa = spec_.kappa();
  if (kappa * std::abs(std::log(lambda)) > 200.0) return std::exp(log_partition(lambda));
  double z = 0.0;
  double power = 1.0;
  for (int m = 0; m <= kappa; ++m) {
    z += power / (std::exp(log_c_fact_[static_cast<std::size_t>(m)] + log_d_fact_[static_cast<std::size_t>(kappa - m)]));
    power *= lambda;
  }
  return z;
}

std::vector<double> ThermoProfile::marginal(double lambda) const {
  const int kappa = spec_.kappa();
  const double log_z = log_partition(lambda);
  const double log_lambda = std::log(lambda);
  std::vector<double> p(static_cast<std::size_t>(kappa) + 1);
  for (int m = 0; m <= kappa; ++m) {
    p[static_cast<std::size_t>(m)] = std::exp(m * log_lambda - log_c_fact_[static_cast<std::size_t>(m)] -
                                              log_d_fact_[static_cast<std::size_t>(kappa - m)] - log_z);
  }
  return p;
}

ThermoProfile::Moments ThermoProfile::single_site_moments(const std::vector<double>& p) const {
  Moments mo{0.0, 0.0, 0.0};
  for (std::size_t m = 0; m < p.size(); ++m) mo.mean += p[m] * static_cast<double>(m);
  for (std::size_t m = 0; m < p.size(); ++m) {
    const double dev = static_cast<double>(m) - mo.mean;
    mo.var += p[m] * dev * dev;
    mo.third += p[m] * dev * dev * dev;
  }
  return mo;
}

double ThermoProfile::mean_at(double lambda) const { return single_site_moments(marginal(lambda)).mean; }

void ThermoProfile::require_interior(double rho) const {
  if (!(rho > 0.0 && rho < kappa())) {
    throw std::domain_error("rho must lie strictly inside (0, kappa); got " + std::to_string(rho));
  }
}

double ThermoProfile::solve_lambda(double rho) const {
  require_interior(rho);
  // Monotone in theta = log(lambda): d mean / d theta = variance > 0.
  auto mean_theta = [this](double theta) { return mean_at(std::exp(theta)); };
  double lo = 0.0;
  double hi = 0.0;
  double step = 1.0;
  if (mean_theta(0.0) < rho) {
    while (mean_theta(hi) < rho) {
      lo = hi;
      hi += step;
      step *= 2.0;
      if (hi > 700.0) throw std::domain_error("solve_lambda: fugacity bracket overflow");
    }
  } else {
    while (mean_theta(lo) > rho) {
      hi = lo;
      lo -= step;
      step *= 2.0;
      if (lo < -700.0) throw std::domain_error("solve_lambda: fugacity bracket underflow");
    }
  }
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    (mean_theta(mid) < rho ? lo : hi) = mid;
  }
  double theta = 0.5 * (lo + hi);
  for (int it = 0; it < 50; ++it) {
    const Moments mo = single_site_moments(marginal(std::exp(theta)));
    const double err = mo.mean - rho;
    if (err < 0.0) lo = std::max(lo, theta);
    if (err > 0.0) hi = std::min(hi, theta);
    double next = theta - err / mo.var;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const bool converged = std::abs(next - theta) <= 1e-15 * std::max(1.0, std::abs(theta));
    theta = next;
    if (converged) break;
  }
  const double lambda = std::exp(theta);
  const double residual = std::abs(mean_at(lambda) - rho);
  if (residual > kMeanTolerance) {
    throw InvariantError("solve_lambda: mean residual " + std::to_string(residual) + " above tolerance");
  }
  return lambda;
}

std::vector<double> ThermoProfile::marginal_at_density(double rho) const { return marginal(solve_lambda(rho)); }

double ThermoProfile::compressibility(double rho) const {
  return single_site_moments(marginal_at_density(rho)).var;
}

double ThermoProfile::phi(const LocalFunction& f, double rho) const {
  if (f.kappa() != kappa()) throw std::invalid_argument("phi: kappa mismatch");
  const WindowTables t = window_tables(marginal_at_density(rho), f.width());
  double acc = 0.0;
  for (std::size_t i = 0; i < t.weight.size(); ++i) acc += t.weight[i] * f.at(i);
  return acc;
}

PhiDerivatives ThermoProfile::phi_derivatives(const LocalFunction& f, double rho) const {
  if (f.kappa() != kappa()) throw std::invalid_argument("phi_derivatives: kappa mismatch");
  const std::vector<double> p = marginal_at_density(rho);
  const Moments mo = single_site_moments(p);
  const WindowTables t = window_tables(p, f.width());
  const double n_mean = f.width() * mo.mean;
  double mean_f = 0.0;
  for (std::size_t i = 0; i < t.weight.size(); ++i) mean_f += t.weight[i] * f.at(i);
  // d/dtheta E[f] = E[(f - Ef)(N - EN)], d^2/dtheta^2 E[f] = E[(f - Ef)(N - EN)^2].
  double c1 = 0.0;
  double c2 = 0.0;
  for (std::size_t i = 0; i < t.weight.size(); ++i) {
    const double df = f.at(i) - mean_f;
    const double dn = t.count[i] - n_mean;
    c1 += t.weight[i] * df * dn;
    c2 += t.weight[i] * df * dn * dn;
  }
  const double chi = mo.var;
  return {c1 / chi, c2 / (chi * chi) - c1 * mo.third / (chi * chi * chi)};
}

double ThermoProfile::phi_second_derivative_numeric(const LocalFunction& f, double rho) const {
  require_interior(rho);
  double h = 1e-4;
  while (rho - h <= 0.0 || rho + h >= kappa()) h *= 0.5;
  auto central = [&](double step) {
    return (phi_derivatives(f, rho + step).first - phi_derivatives(f, rho - step).first) / (2.0 * step);
  };
  const double coarse = central(h);
  const double fine = central(0.5 * h);
  return (4.0 * fine - coarse) / 3.0;
}

void ThermoProfile::require_gradient(const char* what) const {
  if (!gradient_) {
    throw NonGradientError(std::string(what) + ": coefficients are only defined for gradient rate families");
  }
}

LocalFunction ThermoProfile::c_function() const { return LocalFunction::site(kappa(), spec_.c_values()); }

LocalFunction ThermoProfile::rate_function() const { return LocalFunction::rate(spec_); }

Coefficients ThermoProfile::coefficients(double rho, double alpha, int n, double alpha0) const {
  require_gradient("coefficients");
  require_interior(rho);
  const LocalFunction cf = c_function();
  const LocalFunction rf = rate_function();
  const double ck = spec_.c(kappa());
  const PhiDerivatives dc = phi_derivatives(cf, rho);
  const PhiDerivatives dr = phi_derivatives(rf, rho);
  Coefficients out{};
  out.chi = compressibility(rho);
  out.phi_c = phi(cf, rho);
  out.phi_r = phi(rf, rho);
  out.D = 0.5 * ck * dc.first;
  out.Lambda = 0.5 * alpha * dr.second;
  out.v_tilde = alpha0 * out.phi_r;
  out.v_n = alpha * std::pow(static_cast<double>(n), 1.5) * dr.first;
  out.qv_limit = out.phi_r;
  return out;
}

double ThermoProfile::einstein_residual(double rho) const {
  const Coefficients co = coefficients(rho, 0.0, 1);
  return 2.0 * co.chi * co.D - co.phi_r;
}

}  // namespace pep
