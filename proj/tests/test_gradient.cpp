#include <doctest.h>

#include <random>

#include "pep/errors.hpp"
#include "pep/gradient.hpp"
#include "random_specs.hpp"

using namespace pep;

TEST_CASE("closed-form gradient criterion") {
  for (int kappa : {1, 2, 3, 6}) CHECK(check_gradient_closed_form(RateSpec::sep(kappa)).gradient);
  const auto ind = check_gradient_closed_form(RateSpec::indicator(2));
  CHECK_FALSE(ind.gradient);
  CHECK(ind.violating_m == 1);
  CHECK(ind.lhs == 1.0);
  CHECK(ind.rhs == 0.0);
  CHECK(check_gradient_closed_form(RateSpec::indicator(1)).gradient);
  // Unnormalized input is normalized first.
  CHECK(check_gradient_closed_form(RateSpec(1, {0, 1}, {0, 5})).gradient);
}

TEST_CASE("gradient function h") {
  const auto h1 = solve_gradient_h(RateSpec::sep(1));
  REQUIRE(h1);
  CHECK((*h1)[0] == 0.0);
  CHECK((*h1)[1] == doctest::Approx(0.5).epsilon(1e-12));
  const auto h2 = solve_gradient_h(RateSpec::sep(2));
  REQUIRE(h2);
  for (int m = 0; m <= 2; ++m) CHECK((*h2)[static_cast<std::size_t>(m)] == doctest::Approx(m).epsilon(1e-12));
  CHECK_FALSE(solve_gradient_h(RateSpec::indicator(2)));
}

TEST_CASE("every kappa = 1 spec is gradient") {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 20; ++trial) {
    const RateSpec spec = testing::random_decomposable_spec(gen, 1);
    CHECK(check_gradient_closed_form(spec).gradient);
    CHECK(solve_gradient_h(spec).has_value());
  }
}

TEST_CASE("classification procedures agree") {
  const auto sep = classify(RateSpec::sep(2));
  CHECK(sep.verdict == "gradient");
  CHECK(sep.oracle_invariant);
  CHECK(sep.oracle.size() == 3);

  const auto ind = classify(RateSpec::indicator(2));
  CHECK(ind.verdict == "non-gradient");
  CHECK_FALSE(ind.oracle_invariant);
  CHECK_FALSE(ind.h.has_value());

  ClassifyOptions sym;
  sym.p = 0.5;
  const auto rev = classify(RateSpec::indicator(2), sym);
  CHECK(rev.symmetric);
  CHECK(rev.oracle_invariant);
  CHECK(rev.verdict == "non-gradient");
  CHECK_FALSE(rev.note.empty());

  ClassifyOptions tiny;
  tiny.state_budget = 10;
  const auto skipped = classify(RateSpec::sep(2), tiny);
  CHECK(skipped.oracle_skipped);
  CHECK(skipped.verdict == "gradient");

  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 30; ++trial) {
    const int kappa = 1 + trial % 3;
    const RateSpec spec = trial % 2 ? testing::random_gradient_spec(gen, kappa) : testing::random_decomposable_spec(gen, kappa);
    const auto report = classify(spec);
    CHECK(report.closed_form.gradient == report.h.has_value());
    CHECK(report.closed_form.gradient == report.oracle_invariant);
  }
}
