#include <algorithm>
#include <string>

#include "pep/errors.hpp"
#include "pep/gradient.hpp"
#include "pep/oracle.hpp"

namespace pep {

ClassificationReport classify(const RateSpec& raw, const ClassifyOptions& options) {
  const RateSpec spec = normalize(raw);
  ClassificationReport report;
  report.closed_form = check_gradient_closed_form(spec);
  report.h = solve_gradient_h(spec);
  const AsymmetryParams asym = AsymmetryParams::fixed(options.p);
  report.symmetric = asym.p == asym.q;

  for (int L : options.ring_sizes) {
    try {
      OracleVerdict v;
      v.ring_size = L;
      for (const auto& s : stationarity_residual(spec, asym, L, options.state_budget)) {
        v.sector_residuals.push_back(s.residual);
        v.max_residual = std::max(v.max_residual, s.residual);
      }
      report.oracle.push_back(std::move(v));
    } catch (const BudgetError&) {
      // Larger rings only get bigger; stop here.
      break;
    }
  }
  report.oracle_skipped = report.oracle.empty();
  report.oracle_invariant = std::all_of(report.oracle.begin(), report.oracle.end(), [&](const OracleVerdict& v) {
    return v.max_residual <= options.invariance_threshold;
  });

  const bool closed = report.closed_form.gradient;
  report.verdict = closed ? "gradient" : "non-gradient";
  if (report.symmetric) {
    report.note = "p = q: the product measures are reversible for every decomposable spec, so oracle invariance "
                  "does not discriminate";
    return report;
  }
  const bool solvable = report.h.has_value();
  if (closed != solvable || (!report.oracle_skipped && closed != report.oracle_invariant)) {
    std::string msg = "classify: decision procedures disagree (closed form " + std::string(closed ? "yes" : "no") +
                      ", h solvable " + (solvable ? "yes" : "no");
    if (!report.oracle_skipped) msg += std::string(", oracle invariant ") + (report.oracle_invariant ? "yes" : "no");
    throw InvariantError(msg + ")");
  }
  if (report.oracle_skipped) report.note = "oracle skipped: smallest ring exceeds the state budget";
  return report;
}

}  // namespace pep
