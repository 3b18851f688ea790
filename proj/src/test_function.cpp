#include "pep/test_function.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace pep {

using std::numbers::pi;

TestFunction::TestFunction(Kind kind, int k, double center, double sigma, double M)
    : kind_(kind), k_(k), center_(center), sigma_(sigma), M_(M) {
  if (!(M > 0.0)) throw std::invalid_argument("test function: torus length must be positive");
  std::ostringstream os;
  switch (kind) {
    case Kind::Cos: os << "cos" << k; break;
    case Kind::Sin: os << "sin" << k; break;
    case Kind::Bump: os << "bump_c" << center << "_s" << sigma; break;
  }
  id_ = os.str();
}

TestFunction TestFunction::fourier(int k, bool sine, double M) {
  if (k < 0) throw std::invalid_argument("test function: mode must be >= 0");
  if (sine && k == 0) throw std::invalid_argument("test function: sin mode needs k >= 1");
  return TestFunction(sine ? Kind::Sin : Kind::Cos, k, 0.0, 0.0, M);
}

TestFunction TestFunction::bump(double center, double sigma, double M) {
  if (!(sigma > 0.0) || sigma > M / 12.0) throw std::invalid_argument("test function: bump needs 0 < sigma <= M/12");
  return TestFunction(Kind::Bump, 0, center, sigma, M);
}

double TestFunction::value(double u) const {
  const double w = 2.0 * pi * k_ / M_;
  switch (kind_) {
    case Kind::Cos: return std::cos(w * u);
    case Kind::Sin: return std::sin(w * u);
    case Kind::Bump: break;
  }
  const double d = std::remainder(u - center_, M_);
  return std::exp(-d * d / (2.0 * sigma_ * sigma_));
}

double TestFunction::gradient(double u) const {
  const double w = 2.0 * pi * k_ / M_;
  switch (kind_) {
    case Kind::Cos: return -w * std::sin(w * u);
    case Kind::Sin: return w * std::cos(w * u);
    case Kind::Bump: break;
  }
  const double d = std::remainder(u - center_, M_);
  return -d / (sigma_ * sigma_) * value(u);
}

double TestFunction::laplacian(double u) const {
  const double w = 2.0 * pi * k_ / M_;
  switch (kind_) {
    case Kind::Cos:
    case Kind::Sin: return -w * w * value(u);
    case Kind::Bump: break;
  }
  const double d = std::remainder(u - center_, M_);
  const double s2 = sigma_ * sigma_;
  return (d * d / (s2 * s2) - 1.0 / s2) * value(u);
}

double TestFunction::norm2() const noexcept {
  if (kind_ == Kind::Bump) return sigma_ * std::sqrt(pi);
  return k_ == 0 ? M_ : M_ / 2.0;
}

double TestFunction::grad_norm2() const noexcept {
  if (kind_ == Kind::Bump) return std::sqrt(pi) / (2.0 * sigma_);
  const double w = 2.0 * pi * k_ / M_;
  return k_ == 0 ? 0.0 : w * w * M_ / 2.0;
}

double TestFunction::lap_norm2() const noexcept {
  if (kind_ == Kind::Bump) return 3.0 * std::sqrt(pi) / (4.0 * std::pow(sigma_, 3));
  const double w = 2.0 * pi * k_ / M_;
  return k_ == 0 ? 0.0 : w * w * w * w * M_ / 2.0;
}

std::size_t TestFunction::lattice_size(int n) const {
  const double N = M_ * n;
  const double r = std::round(N);
  if (n < 1 || std::abs(N - r) > 1e-9 || r < 2) throw std::invalid_argument("test function: M n must be an integer >= 2");
  return static_cast<std::size_t>(r);
}

std::vector<double> TestFunction::lattice_values(int n, double shift) const {
  const std::size_t N = lattice_size(n);
  const double Nd = static_cast<double>(N);
  std::vector<double> out(N);
  for (std::size_t x = 0; x < N; ++x) {
    double y = std::fmod(static_cast<double>(x) - shift, Nd);
    if (y < 0.0) y += Nd;
    out[x] = value(y / n);
  }
  return out;
}

std::vector<double> TestFunction::lattice_gradient(int n, double shift) const {
  const std::vector<double> v = lattice_values(n, shift);
  std::vector<double> out(v.size());
  for (std::size_t x = 0; x < v.size(); ++x) out[x] = n * (v[(x + 1) % v.size()] - v[x]);
  return out;
}

TrigSeries TestFunction::series(int n) const {
  lattice_size(n);
  if (!is_trig()) throw std::invalid_argument("test function: bump has no finite trigonometric series");
  // cos = Re(e^{i theta}), sin = Re(-i e^{i theta}).
  return {{k_, kind_ == Kind::Cos ? std::complex<double>(1.0, 0.0) : std::complex<double>(0.0, -1.0)}};
}

TrigSeries TestFunction::gradient_series(int n) const {
  TrigSeries s = series(n);
  const double N = static_cast<double>(lattice_size(n));
  for (auto& term : s) term.a *= static_cast<double>(n) * (std::polar(1.0, 2.0 * pi * term.m / N) - 1.0);
  return s;
}

TrigSeries square_series(const TrigSeries& w, double scale) {
  if (w.size() != 1) throw std::invalid_argument("square_series: expects a single-frequency series");
  const auto& b = w.front();
  // (Re(b e^{i t}))^2 = |b|^2 / 2 + Re(b^2 e^{2 i t}) / 2.
  return {{0, std::complex<double>(0.5 * std::norm(b.a) * scale, 0.0)}, {2 * b.m, 0.5 * b.a * b.a * scale}};
}

}  // namespace pep
