#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "pep/rate_spec.hpp"

namespace pep::testing {

// Strictly increasing c with c(0) = 0, giving d through the gradient identity.
inline RateSpec random_gradient_spec(std::mt19937_64& gen, int kappa) {
  std::uniform_real_distribution<double> inc(0.2, 2.0);
  std::vector<double> c(static_cast<std::size_t>(kappa) + 1, 0.0);
  for (int m = 1; m <= kappa; ++m) c[static_cast<std::size_t>(m)] = c[static_cast<std::size_t>(m - 1)] + inc(gen);
  return RateSpec::gradient_from_c(c);
}

// Random positive c, d. For kappa >= 2 a deliberate departure from the gradient identity
// is enforced after normalization.
inline RateSpec random_decomposable_spec(std::mt19937_64& gen, int kappa) {
  std::uniform_real_distribution<double> val(0.3, 3.0);
  while (true) {
    std::vector<double> c(static_cast<std::size_t>(kappa) + 1, 0.0);
    std::vector<double> d(static_cast<std::size_t>(kappa) + 1, 0.0);
    for (int m = 1; m <= kappa; ++m) {
      c[static_cast<std::size_t>(m)] = val(gen);
      d[static_cast<std::size_t>(m)] = val(gen);
    }
    const RateSpec spec = normalize(RateSpec(kappa, c, d));
    double worst = 0.0;
    for (int m = 0; m <= kappa; ++m) worst = std::max(worst, std::abs(spec.d(kappa - m) - (spec.c(kappa) - spec.c(m))));
    if (kappa == 1 || worst > 0.05) return RateSpec(kappa, c, d);
  }
}

}  // namespace pep::testing
