#include "pep/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "pep/errors.hpp"
#include "pep/thermo.hpp"

namespace pep {
namespace {

std::vector<std::size_t> powers(int kappa, int length) {
  std::vector<std::size_t> pw(static_cast<std::size_t>(length) + 1, 1);
  for (int i = 1; i <= length; ++i) pw[static_cast<std::size_t>(i)] = pw[static_cast<std::size_t>(i - 1)] * (static_cast<std::size_t>(kappa) + 1);
  return pw;
}

// 1 / (c!(m) d!(kappa - m)) for m = 0..kappa.
std::vector<double> site_weights(const RateSpec& spec) {
  const int kappa = spec.kappa();
  std::vector<double> cf(static_cast<std::size_t>(kappa) + 1, 1.0);
  std::vector<double> df(static_cast<std::size_t>(kappa) + 1, 1.0);
  for (int m = 1; m <= kappa; ++m) {
    cf[static_cast<std::size_t>(m)] = cf[static_cast<std::size_t>(m - 1)] * spec.c(m);
    df[static_cast<std::size_t>(m)] = df[static_cast<std::size_t>(m - 1)] * spec.d(m);
  }
  std::vector<double> w(static_cast<std::size_t>(kappa) + 1);
  for (int m = 0; m <= kappa; ++m) w[static_cast<std::size_t>(m)] = 1.0 / (cf[static_cast<std::size_t>(m)] * df[static_cast<std::size_t>(kappa - m)]);
  return w;
}

std::vector<std::vector<std::size_t>> bucket_sectors(const StateSpace& space) {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(space.kappa() * space.length()) + 1);
  for (std::size_t code = 0; code < space.size(); ++code) out[static_cast<std::size_t>(space.particles(code))].push_back(code);
  return out;
}

// Marginal at fugacity lambda, from plain products (no log domain).
std::vector<double> plain_marginal(const std::vector<double>& w, double lambda) {
  std::vector<double> p(w.size());
  double power = 1.0;
  double z = 0.0;
  for (std::size_t m = 0; m < w.size(); ++m) {
    p[m] = power * w[m];
    z += p[m];
    power *= lambda;
  }
  for (auto& v : p) v /= z;
  return p;
}

double plain_mean(const std::vector<double>& p) {
  double mean = 0.0;
  for (std::size_t m = 0; m < p.size(); ++m) mean += static_cast<double>(m) * p[m];
  return mean;
}

}  // namespace

StateSpace::StateSpace(int kappa, int length, std::size_t budget) : kappa_(kappa), length_(length), size_(1) {
  if (length < 1) throw std::invalid_argument("StateSpace: length must be >= 1");
  for (int i = 0; i < length; ++i) {
    size_ *= static_cast<std::size_t>(kappa) + 1;
    if (size_ > budget) {
      throw BudgetError("state space (kappa+1)^L exceeds budget of " + std::to_string(budget) + " states");
    }
  }
}

void StateSpace::decode(std::size_t code, std::vector<int>& out) const {
  out.resize(static_cast<std::size_t>(length_));
  const auto base = static_cast<std::size_t>(kappa_) + 1;
  for (auto& v : out) {
    v = static_cast<int>(code % base);
    code /= base;
  }
}

std::size_t StateSpace::encode(const std::vector<int>& sites) const {
  std::size_t code = 0;
  const auto base = static_cast<std::size_t>(kappa_) + 1;
  for (std::size_t i = sites.size(); i-- > 0;) code = code * base + static_cast<std::size_t>(sites[i]);
  return code;
}

int StateSpace::particles(std::size_t code) const {
  int k = 0;
  const auto base = static_cast<std::size_t>(kappa_) + 1;
  for (int i = 0; i < length_; ++i) {
    k += static_cast<int>(code % base);
    code /= base;
  }
  return k;
}

std::vector<std::size_t> StateSpace::sector(int K) const {
  std::vector<std::size_t> out;
  for (std::size_t code = 0; code < size_; ++code) {
    if (particles(code) == K) out.push_back(code);
  }
  return out;
}

std::uint64_t sector_count(int kappa, int length, int K) {
  if (K < 0 || K > kappa * length) return 0;
  std::vector<std::uint64_t> ways(static_cast<std::size_t>(K) + 1, 0);
  ways[0] = 1;
  for (int site = 0; site < length; ++site) {
    std::vector<std::uint64_t> next(ways.size(), 0);
    for (int total = 0; total <= K; ++total) {
      for (int m = 0; m <= kappa && m <= total; ++m) next[static_cast<std::size_t>(total)] += ways[static_cast<std::size_t>(total - m)];
    }
    ways = std::move(next);
  }
  return ways[static_cast<std::size_t>(K)];
}

Eigen::SparseMatrix<double, Eigen::RowMajor> build_generator(const RateSpec& spec, const AsymmetryParams& asym,
                                                             int length, bool periodic, std::size_t budget) {
  const StateSpace space(spec.kappa(), length, budget);
  if (periodic && length < 2) throw std::invalid_argument("build_generator: ring needs L >= 2");
  const auto pw = powers(spec.kappa(), length);
  const int bonds = periodic ? length : length - 1;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(space.size() * static_cast<std::size_t>(2 * bonds + 1));
  std::vector<int> eta;
  for (std::size_t code = 0; code < space.size(); ++code) {
    space.decode(code, eta);
    double out_rate = 0.0;
    for (int x = 0; x < bonds; ++x) {
      const int y = (x + 1) % length;
      const int a = eta[static_cast<std::size_t>(x)];
      const int b = eta[static_cast<std::size_t>(y)];
      const double right = asym.p * spec.rate(a, b);
      const double left = asym.q * spec.rate(b, a);
      if (right > 0.0) {
        triplets.emplace_back(static_cast<int>(code), static_cast<int>(code - pw[static_cast<std::size_t>(x)] + pw[static_cast<std::size_t>(y)]), right);
        out_rate += right;
      }
      if (left > 0.0) {
        triplets.emplace_back(static_cast<int>(code), static_cast<int>(code - pw[static_cast<std::size_t>(y)] + pw[static_cast<std::size_t>(x)]), left);
        out_rate += left;
      }
    }
    triplets.emplace_back(static_cast<int>(code), static_cast<int>(code), -out_rate);
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> gen(static_cast<Eigen::Index>(space.size()), static_cast<Eigen::Index>(space.size()));
  gen.setFromTriplets(triplets.begin(), triplets.end());
  return gen;
}

std::vector<double> product_weights(const RateSpec& spec, const StateSpace& space) {
  const std::vector<double> w = site_weights(normalize(spec));
  std::vector<double> nu(space.size());
  std::vector<int> eta;
  for (std::size_t code = 0; code < space.size(); ++code) {
    space.decode(code, eta);
    double prod = 1.0;
    for (int m : eta) prod *= w[static_cast<std::size_t>(m)];
    nu[code] = prod;
  }
  return nu;
}

std::vector<SectorResidual> stationarity_residual(const RateSpec& spec, const AsymmetryParams& asym, int length,
                                                  std::size_t budget) {
  const StateSpace space(spec.kappa(), length, budget);
  const auto gen = build_generator(spec, asym, length, true, budget);
  const std::vector<double> nu = product_weights(spec, space);
  const Eigen::Map<const Eigen::VectorXd> nu_vec(nu.data(), static_cast<Eigen::Index>(nu.size()));
  const Eigen::VectorXd flux = gen.transpose() * nu_vec;

  std::vector<SectorResidual> out;
  const auto sectors = bucket_sectors(space);
  for (std::size_t K = 0; K < sectors.size(); ++K) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t code : sectors[K]) {
      num = std::max(num, std::abs(flux(static_cast<Eigen::Index>(code))));
      den = std::max(den, nu[code]);
    }
    out.push_back({static_cast<int>(K), sectors[K].size(), num / den});
  }
  return out;
}

double detailed_balance_residual(const RateSpec& spec, const AsymmetryParams& asym, int length, std::size_t budget) {
  const StateSpace space(spec.kappa(), length, budget);
  const auto gen = build_generator(spec, asym, length, true, budget);
  const std::vector<double> nu = product_weights(spec, space);
  const auto sectors = bucket_sectors(space);
  std::vector<double> sector_max(sectors.size(), 0.0);
  for (std::size_t K = 0; K < sectors.size(); ++K) {
    for (std::size_t code : sectors[K]) sector_max[K] = std::max(sector_max[K], nu[code]);
  }
  double worst = 0.0;
  for (Eigen::Index row = 0; row < gen.outerSize(); ++row) {
    const double scale = sector_max[static_cast<std::size_t>(space.particles(static_cast<std::size_t>(row)))];
    for (decltype(gen)::InnerIterator it(gen, row); it; ++it) {
      if (it.col() == row) continue;
      const double forward = nu[static_cast<std::size_t>(row)] * it.value();
      const double backward = nu[static_cast<std::size_t>(it.col())] * gen.coeff(it.col(), row);
      worst = std::max(worst, std::abs(forward - backward) / scale);
    }
  }
  return worst;
}

double exact_phi(const RateSpec& raw, const LocalFunction& f, double rho) {
  const RateSpec spec = normalize(raw);
  const int kappa = spec.kappa();
  if (f.kappa() != kappa) throw std::invalid_argument("exact_phi: kappa mismatch");
  if (f.width() > 6) throw BudgetError("exact_phi: support wider than 6 sites");
  if (!(rho > 0.0 && rho < kappa)) throw std::domain_error("rho must lie strictly inside (0, kappa)");
  const std::vector<double> w = site_weights(spec);

  // Bisection in log-fugacity; mean is increasing.
  double lo = -1.0;
  double hi = 1.0;
  while (plain_mean(plain_marginal(w, std::exp(lo))) > rho) lo *= 2.0;
  while (plain_mean(plain_marginal(w, std::exp(hi))) < rho) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (plain_mean(plain_marginal(w, std::exp(mid))) < rho ? lo : hi) = mid;
  }
  const std::vector<double> p = plain_marginal(w, std::exp(0.5 * (lo + hi)));

  const auto size = f.table().size();
  std::vector<int> window(static_cast<std::size_t>(f.width()));
  double acc = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    decode_window(i, kappa, window);
    double weight = 1.0;
    for (int m : window) weight *= p[static_cast<std::size_t>(m)];
    acc += weight * f.at(i);
  }
  return acc;
}

double canonical_expectation(const RateSpec& spec, const LocalFunction& f, int ell, int K, std::size_t budget) {
  if (ell < f.width()) throw std::invalid_argument("canonical_expectation: ell smaller than support of f");
  if (K < 0 || K > spec.kappa() * ell) throw std::invalid_argument("canonical_expectation: K out of range");
  const StateSpace space(spec.kappa(), ell, budget);
  const std::vector<double> w = site_weights(normalize(spec));
  const auto base = static_cast<std::size_t>(spec.kappa()) + 1;
  std::size_t window_mod = 1;
  for (int i = 0; i < f.width(); ++i) window_mod *= base;
  std::vector<int> eta;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t code = 0; code < space.size(); ++code) {
    if (space.particles(code) != K) continue;
    space.decode(code, eta);
    double prod = 1.0;
    for (int m : eta) prod *= w[static_cast<std::size_t>(m)];
    num += prod * f.at(code % window_mod);
    den += prod;
  }
  return num / den;
}

double eoe_residual(const RateSpec& spec, const LocalFunction& f, int ell, const EoeOptions& options) {
  const ThermoProfile thermo(spec);
  const int kappa = spec.kappa();
  double worst = 0.0;
  for (int K = 1; K < kappa * ell; ++K) {
    const double rho = static_cast<double>(K) / ell;
    if (rho < options.rho_min * kappa || rho > options.rho_max * kappa) continue;
    const double canonical = canonical_expectation(spec, f, ell, K, options.budget);
    const double correction = thermo.compressibility(rho) * thermo.phi_derivatives(f, rho).second / (2.0 * ell);
    worst = std::max(worst, std::abs(canonical - thermo.phi(f, rho) + correction));
  }
  return worst;
}

double eoe_l2_residual(const RateSpec& spec, const LocalFunction& f, double rho, int ell, std::size_t budget) {
  const ThermoProfile thermo(spec);
  const int kappa = spec.kappa();
  const std::vector<double> p = thermo.marginal_at_density(rho);
  // Law of eta_0 + ... + eta_{ell-1} under nu_rho.
  std::vector<double> law{1.0};
  for (int i = 0; i < ell; ++i) {
    std::vector<double> next(law.size() + static_cast<std::size_t>(kappa), 0.0);
    for (std::size_t s = 0; s < law.size(); ++s) {
      for (int m = 0; m <= kappa; ++m) next[s + static_cast<std::size_t>(m)] += law[s] * p[static_cast<std::size_t>(m)];
    }
    law = std::move(next);
  }
  const double phi0 = thermo.phi(f, rho);
  const PhiDerivatives der = thermo.phi_derivatives(f, rho);
  const double chi = thermo.compressibility(rho);
  double acc = 0.0;
  for (int K = 0; K <= kappa * ell; ++K) {
    const double mass = law[static_cast<std::size_t>(K)];
    if (mass < 1e-300) continue;
    const double dev = static_cast<double>(K) / ell - rho;
    const double fit = phi0 + der.first * dev + 0.5 * der.second * (dev * dev - chi / ell);
    const double gap = canonical_expectation(spec, f, ell, K, budget) - fit;
    acc += mass * gap * gap;
  }
  return acc;
}

std::optional<double> spectral_gap(const RateSpec& spec, int ell, int K, std::size_t dense_cap) {
  const StateSpace space(spec.kappa(), ell);
  const std::vector<std::size_t> states = space.sector(K);
  if (states.size() <= 1) return std::nullopt;
  if (states.size() > dense_cap) {
    throw BudgetError("spectral_gap: sector has " + std::to_string(states.size()) + " states, dense cap is " +
                      std::to_string(dense_cap));
  }
  const auto gen = build_generator(spec, AsymmetryParams::symmetric(), ell, false);
  const std::vector<double> nu = product_weights(spec, space);
  const auto dim = static_cast<Eigen::Index>(states.size());
  std::vector<Eigen::Index> local(space.size(), -1);
  for (Eigen::Index i = 0; i < dim; ++i) local[states[static_cast<std::size_t>(i)]] = i;
  Eigen::MatrixXd sym = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const auto a = static_cast<Eigen::Index>(states[static_cast<std::size_t>(i)]);
    for (decltype(gen)::InnerIterator it(gen, a); it; ++it) {
      const Eigen::Index j = local[static_cast<std::size_t>(it.col())];
      sym(i, j) = -std::sqrt(nu[static_cast<std::size_t>(a)] / nu[static_cast<std::size_t>(it.col())]) * it.value();
    }
  }
  sym = 0.5 * (sym + sym.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw InvariantError("spectral_gap: eigensolver failed");
  return solver.eigenvalues()(1);
}

}  // namespace pep
