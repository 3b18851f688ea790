#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pep/rate_spec.hpp"

namespace pep {

struct ClosedFormVerdict {
  bool gradient = false;
  // First m with |d(kappa-m) - (c(kappa) - c(m))| above tolerance, or -1.
  int violating_m = -1;
  double lhs = 0.0;  // d(kappa - m)
  double rhs = 0.0;  // c(kappa) - c(m)
  double max_violation = 0.0;
};

/// Tests d(kappa - m) = c(kappa) - c(m) for all m on the normalized spec.
ClosedFormVerdict check_gradient_closed_form(const RateSpec& spec, double tol = 1e-12);

struct GradientSolve {
  std::vector<double> h;    // h(0) = 0 pinned; least-squares solution
  double max_residual = 0;  // max |W^S(a,b) - (h(a) - h(b))|
};

/// Least-squares fit of h(a) - h(b) = W^S(a,b) over all pairs, h(0) = 0.
/// Always returns the fit; use solve_gradient_h for the accept/reject decision.
GradientSolve fit_gradient_h(const RateSpec& spec);

/// h if the system h(a) - h(b) = W^S(a,b) is consistent (residual <= 1e-10), else nullopt.
/// A consistent solution is checked against h = c(kappa) c / 2 and throws
/// InvariantError on mismatch.
std::optional<std::vector<double>> solve_gradient_h(const RateSpec& spec);

struct OracleVerdict {
  int ring_size = 0;
  std::vector<double> sector_residuals;  // indexed by particle number K
  double max_residual = 0.0;
};

struct ClassifyOptions {
  double p = 0.7;
  std::vector<int> ring_sizes{3, 4, 5};
  std::size_t state_budget = 2'000'000;
  double invariance_threshold = 1e-10;
};

struct ClassificationReport {
  ClosedFormVerdict closed_form;
  std::optional<std::vector<double>> h;
  std::vector<OracleVerdict> oracle;  // empty when skipped for budget
  bool oracle_skipped = false;
  bool oracle_invariant = false;
  bool symmetric = false;
  std::string verdict;  // "gradient" or "non-gradient"
  std::string note;
};

/// Runs the closed-form, h-solvability and oracle-invariance procedures and
/// throws InvariantError if they disagree for p != q.
ClassificationReport classify(const RateSpec& spec, const ClassifyOptions& options = {});

}  // namespace pep
