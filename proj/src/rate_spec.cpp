#include "pep/rate_spec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "pep/errors.hpp"

namespace pep {

RateSpec::RateSpec(int kappa, std::vector<double> c, std::vector<double> d)
    : kappa_(kappa), stride_(static_cast<std::size_t>(kappa) + 1), c_(std::move(c)), d_(std::move(d)) {
  if (kappa < 1 || kappa > 255) {
    throw ConfigError("kappa", "kappa must lie in [1, 255]");
  }
  if (c_.size() != stride_) throw ConfigError("c", "c must have length kappa+1");
  if (d_.size() != stride_) throw ConfigError("d", "d must have length kappa+1");
  if (c_[0] != 0.0) throw ConfigError("c", "c(0) must be 0");
  if (d_[0] != 0.0) throw ConfigError("d", "d(0) must be 0");
  for (std::size_t m = 1; m < stride_; ++m) {
    if (!(c_[m] > 0.0) || !std::isfinite(c_[m])) {
      throw ConfigError("c", "c(" + std::to_string(m) + ") must be finite and > 0");
    }
    if (!(d_[m] > 0.0) || !std::isfinite(d_[m])) {
      throw ConfigError("d", "d(" + std::to_string(m) + ") must be finite and > 0");
    }
  }
  table_.resize(stride_ * stride_);
  for (std::size_t a = 0; a < stride_; ++a) {
    for (std::size_t b = 0; b < stride_; ++b) {
      table_[a * stride_ + b] = c_[a] * d_[stride_ - 1 - b];
    }
  }
}

RateSpec RateSpec::sep(int kappa) {
  std::vector<double> c(static_cast<std::size_t>(kappa) + 1);
  std::iota(c.begin(), c.end(), 0.0);
  return RateSpec(kappa, c, c);
}

RateSpec RateSpec::indicator(int kappa) { return interpolated(kappa, 0.0); }

RateSpec RateSpec::interpolated(int kappa, double theta) {
  std::vector<double> c(static_cast<std::size_t>(kappa) + 1, 0.0);
  for (int m = 1; m <= kappa; ++m) c[static_cast<std::size_t>(m)] = (1.0 - theta) + theta * m;
  return RateSpec(kappa, c, c);
}

RateSpec RateSpec::gradient_from_c(std::vector<double> c) {
  if (c.size() < 2) throw ConfigError("c", "c must have length kappa+1 >= 2");
  const int kappa = static_cast<int>(c.size()) - 1;
  for (std::size_t m = 1; m < c.size(); ++m) {
    if (!(c[m] > c[m - 1])) throw ConfigError("c", "gradient family needs strictly increasing c");
  }
  std::vector<double> d(c.size());
  for (int m = 0; m <= kappa; ++m) {
    d[static_cast<std::size_t>(kappa - m)] = c.back() - c[static_cast<std::size_t>(m)];
  }
  d[0] = 0.0;
  return RateSpec(kappa, std::move(c), std::move(d));
}

RateSpec normalize(const RateSpec& spec) {
  const int kappa = spec.kappa();
  const double ck = spec.c(kappa);
  const double dk = spec.d(kappa);
  if (!(ck > 0.0) || !(dk > 0.0)) {
    throw std::invalid_argument("normalize: degenerate rate family (c(kappa) or d(kappa) is zero)");
  }
  if (ck == dk) return spec;
  const double scale = std::sqrt(dk / ck);
  const double top = std::sqrt(ck * dk);
  std::vector<double> c(spec.c_values().begin(), spec.c_values().end());
  std::vector<double> d(spec.d_values().begin(), spec.d_values().end());
  for (auto& v : c) v *= scale;
  for (auto& v : d) v /= scale;
  c.back() = top;
  d.back() = top;
  return RateSpec(kappa, std::move(c), std::move(d));
}

double jump_rate(const RateSpec& spec, int a, int b) { return spec.rate(a, b); }

AsymmetryParams AsymmetryParams::sbe(int n, double alpha) {
  if (n < 1) throw ConfigError("n", "n must be >= 1");
  const double drift = alpha / std::sqrt(static_cast<double>(n));
  if (std::abs(drift) > 1.0) throw ConfigError("alpha", "|alpha| / sqrt(n) must not exceed 1");
  AsymmetryParams a;
  a.n = n;
  a.alpha = alpha;
  a.p = 0.5 * (1.0 + drift);
  a.q = 0.5 * (1.0 - drift);
  return a;
}

AsymmetryParams AsymmetryParams::fixed(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p", "p must lie in [0, 1]");
  AsymmetryParams a;
  a.n = 1;
  a.p = p;
  a.q = 1.0 - p;
  a.alpha = a.p - a.q;
  return a;
}

Currents currents(const RateSpec& spec, int a, int b, const AsymmetryParams& asym) {
  const double fwd = spec.rate(a, b);
  const double bwd = spec.rate(b, a);
  return {0.5 * (fwd - bwd), 0.5 * asym.drift() * (fwd + bwd)};
}

EllipticityBounds ellipticity_bounds(const RateSpec& spec) {
  EllipticityBounds out{std::numeric_limits<double>::infinity(), 0.0};
  for (int a = 1; a <= spec.kappa(); ++a) {
    for (int b = 0; b < spec.kappa(); ++b) {
      const double r = spec.rate(a, b);
      out.eps0 = std::min(out.eps0, r);
      out.rmax = std::max(out.rmax, r);
    }
  }
  return out;
}

Configuration::Configuration(int kappa, std::vector<Occupancy> sites)
    : kappa_(kappa), sites_(std::move(sites)) {
  if (kappa < 1 || kappa > 255) throw ConfigError("kappa", "kappa must lie in [1, 255]");
  if (sites_.size() < 2) throw ConfigError("N", "ring needs at least 2 sites");
  for (auto v : sites_) {
    if (v > kappa) throw std::out_of_range("Configuration: occupancy exceeds kappa");
  }
}

Configuration::Configuration(int kappa, std::size_t n_sites, Occupancy fill)
    : Configuration(kappa, std::vector<Occupancy>(n_sites, fill)) {}

void Configuration::jump(std::size_t from, std::size_t to) {
  if (sites_[from] == 0 || sites_[to] == kappa_) {
    throw std::logic_error("Configuration::jump: exclusion rule violated");
  }
  --sites_[from];
  ++sites_[to];
}

std::int64_t Configuration::particle_count() const noexcept {
  std::int64_t total = 0;
  for (auto v : sites_) total += v;
  return total;
}

Configuration Configuration::holes() const {
  std::vector<Occupancy> h(sites_.size());
  for (std::size_t x = 0; x < sites_.size(); ++x) {
    h[x] = static_cast<Occupancy>(kappa_ - sites_[x]);
  }
  return Configuration(kappa_, std::move(h));
}

}  // namespace pep
