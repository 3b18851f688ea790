#include "pep/gradient.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "pep/errors.hpp"

namespace pep {

ClosedFormVerdict check_gradient_closed_form(const RateSpec& raw, double tol) {
  const RateSpec spec = normalize(raw);
  const int kappa = spec.kappa();
  ClosedFormVerdict out;
  out.gradient = true;
  for (int m = 0; m <= kappa; ++m) {
    const double lhs = spec.d(kappa - m);
    const double rhs = spec.c(kappa) - spec.c(m);
    const double gap = std::abs(lhs - rhs);
    out.max_violation = std::max(out.max_violation, gap);
    if (gap > tol && out.gradient) {
      out.gradient = false;
      out.violating_m = m;
      out.lhs = lhs;
      out.rhs = rhs;
    }
  }
  return out;
}

GradientSolve fit_gradient_h(const RateSpec& raw) {
  const RateSpec spec = normalize(raw);
  const int kappa = spec.kappa();
  const int rows = (kappa + 1) * (kappa + 1);
  // Unknowns h(1..kappa); h(0) = 0.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, kappa);
  Eigen::VectorXd rhs(rows);
  int row = 0;
  for (int x = 0; x <= kappa; ++x) {
    for (int y = 0; y <= kappa; ++y, ++row) {
      if (x > 0) a(row, x - 1) += 1.0;
      if (y > 0) a(row, y - 1) -= 1.0;
      rhs(row) = 0.5 * (spec.rate(x, y) - spec.rate(y, x));
    }
  }
  const Eigen::MatrixXd normal = a.transpose() * a;
  const Eigen::VectorXd sol = normal.ldlt().solve(a.transpose() * rhs);

  GradientSolve out;
  out.h.assign(static_cast<std::size_t>(kappa) + 1, 0.0);
  for (int m = 1; m <= kappa; ++m) out.h[static_cast<std::size_t>(m)] = sol(m - 1);
  for (int x = 0; x <= kappa; ++x) {
    for (int y = 0; y <= kappa; ++y) {
      const double ws = 0.5 * (spec.rate(x, y) - spec.rate(y, x));
      const double fit = out.h[static_cast<std::size_t>(x)] - out.h[static_cast<std::size_t>(y)];
      out.max_residual = std::max(out.max_residual, std::abs(ws - fit));
    }
  }
  return out;
}

std::optional<std::vector<double>> solve_gradient_h(const RateSpec& raw) {
  const GradientSolve fit = fit_gradient_h(raw);
  if (fit.max_residual > 1e-10) return std::nullopt;
  const RateSpec spec = normalize(raw);
  const int kappa = spec.kappa();
  for (int m = 0; m <= kappa; ++m) {
    const double expected = 0.5 * spec.c(kappa) * spec.c(m);
    if (std::abs(fit.h[static_cast<std::size_t>(m)] - expected) > 1e-10) {
      throw InvariantError("solve_gradient_h: consistent h differs from c(kappa) c(m) / 2 at m = " +
                           std::to_string(m));
    }
  }
  return fit.h;
}

}  // namespace pep
