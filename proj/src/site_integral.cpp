#include "pep/site_integral.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pep {

SiteIntegral::SiteIntegral(std::vector<double> weights) : weights_(std::move(weights)), g_(weights_.size(), 0.0) {}

SiteIntegral::SiteIntegral(const TrigSeries& series, std::size_t N, double velocity) : g_(N, 0.0) {
  const double base = 2.0 * std::numbers::pi / static_cast<double>(N);
  if (velocity == 0.0) {
    weights_.assign(N, 0.0);
    for (const auto& term : series) {
      for (std::size_t x = 0; x < N; ++x) {
        weights_[x] += std::real(term.a * std::polar(1.0, base * term.m * static_cast<double>(x)));
      }
    }
    return;
  }
  moving_ = true;
  for (const auto& term : series) {
    Mode mode{term.a, base * term.m * velocity, std::vector<std::complex<double>>(N), {}};
    for (std::size_t x = 0; x < N; ++x) {
      // Reduce m x mod N first so large rings keep full phase accuracy.
      const auto r = static_cast<double>((static_cast<long long>(term.m) * static_cast<long long>(x)) %
                                         static_cast<long long>(N));
      mode.phase[x] = std::polar(1.0, base * r);
    }
    modes_.push_back(std::move(mode));
  }
}

void SiteIntegral::reset(std::vector<double> g, double t) {
  if (g.size() != g_.size()) throw std::invalid_argument("SiteIntegral: size mismatch");
  g_ = std::move(g);
  t_ = t;
  integral_ = 0.0;
  resync();
}

void SiteIntegral::resync() {
  if (!moving_) {
    sum_ = 0.0;
    for (std::size_t x = 0; x < g_.size(); ++x) sum_ += g_[x] * weights_[x];
    return;
  }
  for (auto& mode : modes_) {
    mode.S = 0.0;
    for (std::size_t x = 0; x < g_.size(); ++x) mode.S += g_[x] * mode.phase[x];
  }
}

void SiteIntegral::set(std::size_t x, double value) {
  const double delta = value - g_[x];
  if (delta == 0.0) return;
  g_[x] = value;
  if (!moving_) {
    sum_ += delta * weights_[x];
    return;
  }
  for (auto& mode : modes_) mode.S += delta * mode.phase[x];
}

double SiteIntegral::rate() const {
  if (!moving_) return sum_;
  double out = 0.0;
  for (const auto& mode : modes_) out += std::real(mode.a * mode.S * std::polar(1.0, -mode.omega * t_));
  return out;
}

void SiteIntegral::advance(double t) {
  const double dt = t - t_;
  if (dt < 0.0) throw std::invalid_argument("SiteIntegral: time went backwards");
  if (dt == 0.0) return;
  if (!moving_) {
    integral_ += sum_ * dt;
  } else {
    for (const auto& mode : modes_) {
      // int_{t0}^{t0+dt} e^{-i w s} ds = e^{-i w t0} dt (1 - e^{-i x}) / (i x), x = w dt.
      const double x = mode.omega * dt;
      std::complex<double> kernel;
      if (std::abs(x) < 1e-4) {
        kernel = dt * std::complex<double>(1.0 - x * x / 6.0, -x / 2.0 + x * x * x / 24.0);
      } else {
        kernel = dt * (1.0 - std::polar(1.0, -x)) / std::complex<double>(0.0, x);
      }
      integral_ += std::real(mode.a * mode.S * std::polar(1.0, -mode.omega * t_) * kernel);
    }
  }
  t_ = t;
}

}  // namespace pep
