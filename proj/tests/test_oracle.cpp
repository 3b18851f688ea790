#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "pep/errors.hpp"
#include "pep/gradient.hpp"
#include "pep/oracle.hpp"
#include "pep/thermo.hpp"
#include "random_specs.hpp"

using namespace pep;

TEST_CASE("state space and sector counts") {
  const StateSpace s(2, 3);
  CHECK(s.size() == 27);
  std::size_t total = 0;
  for (int K = 0; K <= 6; ++K) {
    CHECK(s.sector(K).size() == sector_count(2, 3, K));
    total += s.sector(K).size();
  }
  CHECK(total == 27);
  CHECK(sector_count(1, 4, 2) == 6);
  CHECK(sector_count(3, 5, 7) == StateSpace(3, 5).sector(7).size());
  std::vector<int> sites;
  s.decode(s.encode({2, 0, 1}), sites);
  CHECK(sites == std::vector<int>{2, 0, 1});
  CHECK_THROWS_AS(StateSpace(3, 20), BudgetError);
}

TEST_CASE("generator structure") {
  const auto asym = AsymmetryParams::fixed(0.7);
  // Two-site ring: both bonds join sites 0 and 1, so the right clock of one bond and the
  // left clock of the other lead to the same state.
  const auto ring2 = build_generator(RateSpec::sep(1), asym, 2);
  CHECK(ring2.rows() == 4);
  CHECK(ring2.coeff(1, 2) == doctest::Approx(0.7 + 0.3));
  // Open two-site segment: the bare two-state chain with rates p and q.
  const auto seg2 = build_generator(RateSpec::sep(1), asym, 2, false);
  CHECK(seg2.coeff(1, 2) == doctest::Approx(0.7));
  CHECK(seg2.coeff(2, 1) == doctest::Approx(0.3));

  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 6; ++trial) {
    const int kappa = 1 + trial % 3;
    const RateSpec spec = testing::random_decomposable_spec(gen, kappa);
    const StateSpace space(kappa, 4);
    const auto L = build_generator(spec, asym, 4);
    for (Eigen::Index r = 0; r < L.outerSize(); ++r) {
      double sum = 0.0;
      for (decltype(L)::InnerIterator it(L, r); it; ++it) {
        sum += it.value();
        CHECK(space.particles(static_cast<std::size_t>(r)) == space.particles(static_cast<std::size_t>(it.col())));
        if (it.col() != r) CHECK(it.value() >= 0.0);
      }
      CHECK(std::abs(sum) <= 1e-12);
    }
  }
}

TEST_CASE("stationarity residuals") {
  const auto drift = AsymmetryParams::fixed(0.7);
  for (const auto& s : stationarity_residual(RateSpec::sep(2), drift, 4)) CHECK(s.residual <= 1e-12);
  double worst = 0.0;
  for (const auto& s : stationarity_residual(RateSpec::indicator(2), drift, 4)) worst = std::max(worst, s.residual);
  CHECK(worst > 1e-3);
  for (const auto& s : stationarity_residual(RateSpec::indicator(2), AsymmetryParams::fixed(0.5), 4)) {
    CHECK(s.residual <= 1e-12);
  }
}

TEST_CASE("ring flux identity: (nu L)(eta) = -2 (p - q) nu(eta) sum_x W^S_{x,x+1}") {
  std::mt19937_64 gen(4);
  const auto asym = AsymmetryParams::fixed(0.8);
  for (int trial = 0; trial < 6; ++trial) {
    const int kappa = 1 + trial % 3;
    const RateSpec spec = normalize(testing::random_decomposable_spec(gen, kappa));
    const StateSpace space(kappa, 4);
    const auto L = build_generator(spec, asym, 4);
    const std::vector<double> nu = product_weights(spec, space);
    const Eigen::Map<const Eigen::VectorXd> v(nu.data(), static_cast<Eigen::Index>(nu.size()));
    const Eigen::VectorXd flux = L.transpose() * v;
    std::vector<int> eta;
    for (std::size_t code = 0; code < space.size(); ++code) {
      space.decode(code, eta);
      double ws = 0.0;
      for (int x = 0; x < 4; ++x) ws += currents(spec, eta[static_cast<std::size_t>(x)], eta[static_cast<std::size_t>((x + 1) % 4)], asym).symmetric;
      const double expected = -2.0 * asym.drift() * nu[code] * ws;
      CHECK(std::abs(flux(static_cast<Eigen::Index>(code)) - expected) <= 1e-12 * std::max(1.0, nu[code]));
    }
  }
}

TEST_CASE("detailed balance at p = q for every decomposable spec") {
  const auto half = AsymmetryParams::fixed(0.5);
  CHECK(detailed_balance_residual(RateSpec::indicator(2), half, 4) <= 1e-12);
  CHECK(detailed_balance_residual(RateSpec::sep(3), half, 4) <= 1e-12);
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 10; ++trial) {
    CHECK(detailed_balance_residual(testing::random_decomposable_spec(gen, 1 + trial % 3), half, 4) <= 1e-12);
  }
  // Asymmetric non-gradient specs break it.
  CHECK(detailed_balance_residual(RateSpec::indicator(2), AsymmetryParams::fixed(0.7), 4) > 1e-3);
}

TEST_CASE("invariance of the product measure matches the closed-form criterion") {
  std::mt19937_64 gen(8);
  const auto drift = AsymmetryParams::fixed(0.7);
  for (int trial = 0; trial < 40; ++trial) {
    const int kappa = 1 + trial % 3;
    const RateSpec spec = trial % 2 ? testing::random_gradient_spec(gen, kappa) : testing::random_decomposable_spec(gen, kappa);
    double worst = 0.0;
    for (int L : {3, 4}) {
      for (const auto& s : stationarity_residual(spec, drift, L)) worst = std::max(worst, s.residual);
    }
    CHECK((worst < 1e-10) == check_gradient_closed_form(spec).gradient);
  }
}

TEST_CASE("exact phi") {
  const LocalFunction prod(1, 2, [](std::span<const int> w) { return static_cast<double>(w[0] * w[1]); });
  CHECK(exact_phi(RateSpec::sep(1), prod, 0.5) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(exact_phi(RateSpec::sep(2), LocalFunction::rate(RateSpec::sep(2)), 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(exact_phi(RateSpec::indicator(3), LocalFunction::constant(3, 1.0), 0.4) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("canonical measures and equivalence of ensembles") {
  const RateSpec s2 = RateSpec::sep(2);
  const LocalFunction eta0 = LocalFunction::occupation(2);
  for (int K = 0; K <= 10; ++K) CHECK(canonical_expectation(s2, eta0, 5, K) == doctest::Approx(K / 5.0).epsilon(1e-13));
  CHECK(eoe_residual(s2, eta0, 6) <= 1e-12);

  const LocalFunction r = LocalFunction::rate(s2);
  std::vector<double> scaled;
  for (int ell : {4, 6, 8, 10}) {
    const double res = eoe_residual(s2, r, ell);
    CHECK(res > 0.0);
    scaled.push_back(res * ell * ell);
  }
  const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
  CHECK(*hi <= 3.0 * *lo);

  // Degree-two remainder of a mean-zero, flat-at-rho function shrinks like ell^{-3} in L^2.
  const ThermoProfile th(s2);
  const double rho = 0.8;
  const LocalFunction rr = LocalFunction::reverse_rate(s2);
  const double slope = th.phi_derivatives(r, rho).first;
  const LocalFunction v = (r + rr) * 0.5 - (eta0 + (-rho)) * slope + (-th.phi(r, rho));
  std::vector<double> cubed;
  for (int ell : {4, 6, 8, 10}) cubed.push_back(eoe_l2_residual(s2, v, rho, ell) * ell * ell * ell);
  const auto [clo, chi] = std::minmax_element(cubed.begin(), cubed.end());
  CHECK(*chi <= 3.0 * *clo);
}

TEST_CASE("spectral gap on open segments") {
  const auto g = spectral_gap(RateSpec::sep(1), 2, 1);
  REQUIRE(g);
  CHECK(*g == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(spectral_gap(RateSpec::sep(2), 4, 0));
  CHECK_FALSE(spectral_gap(RateSpec::sep(2), 4, 8));

  std::vector<double> scaled;
  for (int ell : {3, 4, 5}) {
    const auto gap = spectral_gap(RateSpec::sep(2), ell, ell);
    REQUIRE(gap);
    CHECK(*gap > 0.0);
    scaled.push_back(*gap * ell * ell);
  }
  const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
  CHECK(*hi <= 4.0 * *lo);
  CHECK_THROWS_AS(spectral_gap(RateSpec::sep(2), 10, 10, 100), BudgetError);
}
