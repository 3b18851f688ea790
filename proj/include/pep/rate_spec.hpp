#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pep {

using Occupancy = std::uint8_t;

/// Decomposable jump rates r(a, b) = c(a) * d(kappa - b) on {0..kappa}.
///
/// Construction enforces c(0) = d(0) = 0 and c(m), d(m) > 0 for m >= 1.
/// The (kappa+1)^2 rate table is precomputed and the object is immutable.
class RateSpec {
 public:
  RateSpec(int kappa, std::vector<double> c, std::vector<double> d);

  /// SEP(kappa): c(m) = d(m) = m.
  static RateSpec sep(int kappa);
  /// c(m) = d(m) = 1{m > 0}.
  static RateSpec indicator(int kappa);
  /// c(m) = d(m) = (1 - theta) 1{m > 0} + theta m.
  static RateSpec interpolated(int kappa, double theta);
  /// Gradient family d(kappa - m) = c(kappa) - c(m); c must be strictly increasing.
  static RateSpec gradient_from_c(std::vector<double> c);

  int kappa() const noexcept { return kappa_; }
  double c(int m) const { return c_[static_cast<std::size_t>(m)]; }
  double d(int m) const { return d_[static_cast<std::size_t>(m)]; }
  std::span<const double> c_values() const noexcept { return c_; }
  std::span<const double> d_values() const noexcept { return d_; }

  /// r(a, b) by table lookup; zero iff a = 0 or b = kappa.
  double rate(int a, int b) const noexcept {
    return table_[static_cast<std::size_t>(a) * stride_ + static_cast<std::size_t>(b)];
  }
  std::span<const double> rate_table() const noexcept { return table_; }

  bool is_normalized() const noexcept { return c_.back() == d_.back(); }

  bool operator==(const RateSpec& other) const = default;

 private:
  int kappa_;
  std::size_t stride_;
  std::vector<double> c_;
  std::vector<double> d_;
  std::vector<double> table_;
};

/// Rescales (c, d) so that c(kappa) = d(kappa) = sqrt(c(kappa) d(kappa)); r is unchanged.
RateSpec normalize(const RateSpec& spec);

/// c(a) * d(kappa - b).
double jump_rate(const RateSpec& spec, int a, int b);

/// p, q with p + q = 1. In SBE mode p - q = alpha n^{-1/2}.
struct AsymmetryParams {
  int n = 1;
  double alpha = 0.0;
  double p = 0.5;
  double q = 0.5;

  /// Weakly asymmetric scaling p - q = alpha / sqrt(n).
  static AsymmetryParams sbe(int n, double alpha);
  /// Fixed p (q = 1 - p); n = 1 and alpha = p - q.
  static AsymmetryParams fixed(double p);
  static AsymmetryParams symmetric(int n = 1) { return sbe(n, 0.0); }

  double drift() const noexcept { return p - q; }
};

struct Currents {
  double symmetric;      // W^S = (r(a,b) - r(b,a)) / 2
  double antisymmetric;  // W^A = (p - q)/2 (r(a,b) + r(b,a))
};

Currents currents(const RateSpec& spec, int a, int b, const AsymmetryParams& asym);

struct EllipticityBounds {
  double eps0;  // min r(a,b) over a > 0, b < kappa
  double rmax;  // max over the same pairs
};

EllipticityBounds ellipticity_bounds(const RateSpec& spec);

/// Occupation numbers on a periodic ring of N >= 2 sites, each in {0..kappa}.
class Configuration {
 public:
  Configuration(int kappa, std::vector<Occupancy> sites);
  Configuration(int kappa, std::size_t n_sites, Occupancy fill = 0);

  int kappa() const noexcept { return kappa_; }
  std::size_t size() const noexcept { return sites_.size(); }
  Occupancy operator[](std::size_t x) const { return sites_[x]; }
  std::span<const Occupancy> sites() const noexcept { return sites_; }

  std::size_t wrap(std::ptrdiff_t x) const noexcept {
    const auto n = static_cast<std::ptrdiff_t>(sites_.size());
    return static_cast<std::size_t>(((x % n) + n) % n);
  }

  /// Moves one particle from `from` to `to`; requires sites_[from] > 0 and sites_[to] < kappa.
  void jump(std::size_t from, std::size_t to);

  std::int64_t particle_count() const noexcept;

  /// Holes kappa - eta_x.
  Configuration holes() const;

  bool operator==(const Configuration& other) const = default;

 private:
  int kappa_;
  std::vector<Occupancy> sites_;
};

}  // namespace pep
