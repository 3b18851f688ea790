#pragma once

#include <Eigen/SparseCore>
#include <cstdint>
#include <optional>
#include <vector>

#include "pep/local_function.hpp"
#include "pep/rate_spec.hpp"

namespace pep {

inline constexpr std::size_t kDefaultStateBudget = 2'000'000;

/// Full state space {0..kappa}^L of a ring or segment, encoded base kappa+1
/// with site 0 as the least significant digit.
class StateSpace {
 public:
  StateSpace(int kappa, int length, std::size_t budget = kDefaultStateBudget);

  int kappa() const noexcept { return kappa_; }
  int length() const noexcept { return length_; }
  std::size_t size() const noexcept { return size_; }

  void decode(std::size_t code, std::vector<int>& out) const;
  std::size_t encode(const std::vector<int>& sites) const;
  int particles(std::size_t code) const;

  /// Codes of all states with exactly K particles, ascending.
  std::vector<std::size_t> sector(int K) const;

 private:
  int kappa_;
  int length_;
  std::size_t size_;
};

/// Number of compositions of K into `length` parts in {0..kappa}.
std::uint64_t sector_count(int kappa, int length, int K);

/// Generator with unit time scale: rate p r(eta_x, eta_{x+1}) for x -> x+1 and
/// q r(eta_{x+1}, eta_x) for x+1 -> x. Ring (periodic) or open segment.
/// Row-major sparse matrix L(eta, xi), diagonal = minus row sum.
Eigen::SparseMatrix<double, Eigen::RowMajor> build_generator(const RateSpec& spec, const AsymmetryParams& asym,
                                                             int length, bool periodic = true,
                                                             std::size_t budget = kDefaultStateBudget);

/// Unnormalized product weights prod_x 1 / (c!(eta_x) d!(kappa - eta_x)) for each state (lambda = 1).
std::vector<double> product_weights(const RateSpec& spec, const StateSpace& space);

struct SectorResidual {
  int K;
  std::size_t state_count;
  double residual;  // ||nu^T L||_inf / ||nu||_inf on the sector
};

std::vector<SectorResidual> stationarity_residual(const RateSpec& spec, const AsymmetryParams& asym, int length,
                                                  std::size_t budget = kDefaultStateBudget);

/// max over pairs of |nu(eta) L(eta, xi) - nu(xi) L(xi, eta)| / max nu, at the supplied p, q.
double detailed_balance_residual(const RateSpec& spec, const AsymmetryParams& asym, int length,
                                 std::size_t budget = kDefaultStateBudget);

/// E_{nu_rho}[f] by enumeration of the support with explicitly built marginals.
/// Independent of ThermoProfile (own fugacity bisection).
double exact_phi(const RateSpec& spec, const LocalFunction& f, double rho);

/// E[f(eta_0..eta_{k-1})] under the product measure on ell sites conditioned on K particles.
double canonical_expectation(const RateSpec& spec, const LocalFunction& f, int ell, int K,
                             std::size_t budget = kDefaultStateBudget);

struct EoeOptions {
  double rho_min = 0.2;  // as fractions of kappa
  double rho_max = 0.8;
  std::size_t budget = kDefaultStateBudget;
};

/// sup over interior K of |E_{ell,K}[f] - Phi_f(K/ell) + chi Phi_f''(K/ell) / (2 ell)|.
double eoe_residual(const RateSpec& spec, const LocalFunction& f, int ell, const EoeOptions& options = {});

/// E_{nu_rho}[(E[f | eta_0 + ... + eta_{ell-1}])^2]: L^2 size of the canonical projection of f.
double eoe_l2_residual(const RateSpec& spec, const LocalFunction& f, double rho, int ell,
                       std::size_t budget = kDefaultStateBudget);

/// Smallest nonzero eigenvalue of -L at p = q = 1/2 on an open segment of `ell` sites
/// in sector K. nullopt for single-state sectors.
std::optional<double> spectral_gap(const RateSpec& spec, int ell, int K, std::size_t dense_cap = 5000);

}  // namespace pep
