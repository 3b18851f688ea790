#include "pep/fluctuation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pep/errors.hpp"

namespace pep {
namespace {

SiteIntegral moving_integral(const TestFunction& phi, int n, double v, const TrigSeries& series,
                             const std::vector<double>& static_weights) {
  const std::size_t N = phi.lattice_size(n);
  if (v == 0.0) return SiteIntegral(static_weights);
  if (!phi.is_trig()) throw std::invalid_argument("moving frame needs a Fourier test function");
  return SiteIntegral(series, N, v);
}

std::size_t ring_add(std::size_t x, std::ptrdiff_t d, std::size_t N) {
  const auto n = static_cast<std::ptrdiff_t>(N);
  return static_cast<std::size_t>(((static_cast<std::ptrdiff_t>(x) + d) % n + n) % n);
}

// Distinct x in {s - width + 1, ..., s} for s in {a, b}.
int touched_windows(std::size_t a, std::size_t b, int width, std::size_t N, std::size_t* out) {
  int count = 0;
  for (std::size_t s : {a, b}) {
    for (int j = 0; j < width; ++j) {
      const std::size_t x = ring_add(s, -j, N);
      if (std::find(out, out + count, x) == out + count) out[count++] = x;
    }
  }
  return count;
}

}  // namespace

double FieldStatistic::mean() const {
  if (values_.empty()) return 0.0;
  double acc = 0.0;
  for (double v : values_) acc += v;
  return acc / static_cast<double>(values_.size());
}

double FieldStatistic::variance() const {
  if (values_.size() < 2) return 0.0;
  const double m = mean();
  double acc = 0.0;
  for (double v : values_) acc += (v - m) * (v - m);
  return acc / static_cast<double>(values_.size() - 1);
}

double FieldStatistic::stderr_mean() const {
  if (values_.size() < 2) return 0.0;
  return std::sqrt(variance() / static_cast<double>(values_.size()));
}

double fluctuation_field(const Configuration& eta, const TestFunction& phi, int n, double rho, double v, double t) {
  if (phi.lattice_size(n) != eta.size()) throw std::invalid_argument("fluctuation_field: N != M n");
  const std::vector<double> w = phi.lattice_values(n, v * t);
  double acc = 0.0;
  for (std::size_t x = 0; x < eta.size(); ++x) acc += (eta[x] - rho) * w[x];
  return acc / std::sqrt(static_cast<double>(n));
}

double local_average_field(const Configuration& eta, std::size_t x, std::size_t ell) {
  if (ell < 1 || ell > eta.size()) throw std::invalid_argument("local_average_field: need 1 <= ell <= N");
  long sum = 0;
  for (std::size_t y = 0; y < ell; ++y) sum += eta[(x + y) % eta.size()];
  return static_cast<double>(sum) / static_cast<double>(ell);
}

LocalFunction nonlinear_V(const ThermoProfile& thermo, double rho) {
  if (!thermo.gradient()) throw NonGradientError("nonlinear_V: defined for gradient rate families only");
  const int kappa = thermo.kappa();
  const LocalFunction r = LocalFunction::rate(thermo.spec());
  const LocalFunction rr = LocalFunction::reverse_rate(thermo.spec());
  const PhiDerivatives dr = thermo.phi_derivatives(r, rho);
  const double phi_r = thermo.phi(r, rho);
  const LocalFunction eta0 = LocalFunction::occupation(kappa);
  const LocalFunction v = (r + rr) * 0.5 - (eta0 + (-rho)) * dr.first + (-phi_r);

  const PhiDerivatives dv = thermo.phi_derivatives(v, rho);
  if (std::abs(dv.first) > 1e-8) {
    throw InvariantError("nonlinear_V: d/drho E[V] = " + std::to_string(dv.first) + " at rho");
  }
  if (std::abs(dv.second - dr.second) > 1e-6) {
    throw InvariantError("nonlinear_V: Phi_V'' differs from Phi_r''");
  }
  return v;
}

LocalFunction first_order_bg_function(const ThermoProfile& thermo, const LocalFunction& f, double rho) {
  const PhiDerivatives d = thermo.phi_derivatives(f, rho);
  const LocalFunction eta0 = LocalFunction::occupation(f.kappa());
  return f + (-thermo.phi(f, rho)) - (eta0 + (-rho)) * d.first;
}

void check_bg2_precondition(const ThermoProfile& thermo, const LocalFunction& f, double rho, double tol) {
  const double mean = thermo.phi(f, rho);
  const double slope = thermo.phi_derivatives(f, rho).first;
  if (std::abs(mean) > tol || std::abs(slope) > tol) {
    throw std::invalid_argument("bg2: f must satisfy E[f] = dE[f]/drho = 0 at rho (got " + std::to_string(mean) +
                                ", " + std::to_string(slope) + ")");
  }
}

WindowSums::WindowSums(const Configuration& eta, std::size_t ell) : ell_(ell), sums_(eta.size()) {
  const std::size_t N = eta.size();
  if (ell < 1 || ell > N) throw std::invalid_argument("window length must lie in [1, N]");
  int s = 0;
  for (std::size_t y = 0; y < ell; ++y) s += eta[y];
  for (std::size_t x = 0; x < N; ++x) {
    sums_[x] = s;
    s += eta[(x + ell) % N] - eta[x];
  }
}

int WindowSums::update(std::size_t from, std::size_t to, std::size_t changed[2]) {
  const std::size_t N = sums_.size();
  if (ell_ == N) return 0;
  const auto l = static_cast<std::ptrdiff_t>(ell_);
  std::size_t lose;
  std::size_t gain;
  if (to == ring_add(from, 1, N)) {
    lose = ring_add(from, 1 - l, N);
    gain = to;
  } else {
    lose = from;
    gain = ring_add(to, 1 - l, N);
  }
  --sums_[lose];
  ++sums_[gain];
  changed[0] = lose;
  changed[1] = gain;
  return 2;
}

FieldObserver::FieldObserver(std::vector<TestFunction> phis, int n, double rho, double v)
    : phis_(std::move(phis)), n_(n), rho_(rho), v_(v), values_(phis_.size()) {}

void FieldObserver::on_frame(std::size_t, double t, const Configuration& eta) {
  for (std::size_t i = 0; i < phis_.size(); ++i) values_[i].push_back(fluctuation_field(eta, phis_[i], n_, rho_, v_, t));
}

QvObserver::QvObserver(const RateSpec& spec, const AsymmetryParams& asym, const TestFunction& phi, double v)
    : spec_(spec), p_(asym.p), q_(asym.q) {
  const int n = asym.n;
  std::vector<double> w = phi.lattice_gradient(n);
  for (auto& x : w) x = x * x / n;
  integral_ = moving_integral(phi, n, v, v == 0.0 ? TrigSeries{} : square_series(phi.gradient_series(n), 1.0 / n), w);
}

double QvObserver::bond_value(const Configuration& eta, std::size_t x) const {
  const int a = eta[x];
  const int b = eta[(x + 1) % eta.size()];
  return p_ * spec_.rate(a, b) + q_ * spec_.rate(b, a);
}

void QvObserver::on_start(const Configuration& eta) {
  if (eta.size() != integral_.size()) throw std::invalid_argument("QvObserver: ring size does not match M n");
  std::vector<double> g(eta.size());
  for (std::size_t x = 0; x < eta.size(); ++x) g[x] = bond_value(eta, x);
  integral_.reset(std::move(g), 0.0);
}

void QvObserver::on_jump(double t, std::size_t from, std::size_t to, const Configuration& eta) {
  integral_.advance(t);
  std::size_t bonds[4];
  const int k = touched_windows(from, to, 2, eta.size(), bonds);
  for (int i = 0; i < k; ++i) integral_.set(bonds[i], bond_value(eta, bonds[i]));
}

void QvObserver::on_frame(std::size_t, double t, const Configuration&) {
  integral_.advance(t);
  values_.push_back(integral_.integral());
  integral_.resync();
}

Bg2Observer::Bg2Observer(const LocalFunction& f, double phi_f_second, double rho, const TestFunction& phi, int n,
                         double v, std::vector<std::size_t> ells)
    : f_(f), half_second_(0.5 * phi_f_second), rho_(rho), ells_(std::move(ells)) {
  const std::vector<double> w = phi.lattice_values(n);
  const TrigSeries series = v == 0.0 ? TrigSeries{} : phi.series(n);
  f_integral_ = moving_integral(phi, n, v, series, w);
  const std::size_t N = phi.lattice_size(n);
  for (std::size_t ell : ells_) {
    if (ell < 1 || ell > N) throw std::invalid_argument("bg2: ell must lie in [1, N]");
    window_integrals_.push_back(moving_integral(phi, n, v, series, w));
  }
  values_.resize(ells_.size());
}

double Bg2Observer::window_term(int sum, std::size_t ell) const {
  const double dev = static_cast<double>(sum) / static_cast<double>(ell) - rho_;
  return -half_second_ * dev * dev;
}

void Bg2Observer::on_start(const Configuration& eta) {
  const std::size_t N = eta.size();
  if (N != f_integral_.size()) throw std::invalid_argument("Bg2Observer: ring size does not match M n");
  std::vector<double> g(N);
  for (std::size_t x = 0; x < N; ++x) g[x] = f_.at_site(eta, x);
  f_integral_.reset(std::move(g), 0.0);
  windows_.clear();
  for (std::size_t i = 0; i < ells_.size(); ++i) {
    windows_.emplace_back(eta, ells_[i]);
    std::vector<double> h(N);
    for (std::size_t x = 0; x < N; ++x) h[x] = window_term(windows_[i].sum(x), ells_[i]);
    window_integrals_[i].reset(std::move(h), 0.0);
  }
}

void Bg2Observer::on_jump(double t, std::size_t from, std::size_t to, const Configuration& eta) {
  f_integral_.advance(t);
  std::size_t xs[2 * LocalFunction::kMaxWidth];
  const int k = touched_windows(from, to, f_.width(), eta.size(), xs);
  for (int i = 0; i < k; ++i) f_integral_.set(xs[i], f_.at_site(eta, xs[i]));
  for (std::size_t i = 0; i < ells_.size(); ++i) {
    window_integrals_[i].advance(t);
    std::size_t changed[2];
    const int c = windows_[i].update(from, to, changed);
    for (int j = 0; j < c; ++j) {
      window_integrals_[i].set(changed[j], window_term(windows_[i].sum(changed[j]), ells_[i]));
    }
  }
}

void Bg2Observer::on_frame(std::size_t, double t, const Configuration&) {
  f_integral_.advance(t);
  f_integral_.resync();
  for (std::size_t i = 0; i < ells_.size(); ++i) {
    window_integrals_[i].advance(t);
    window_integrals_[i].resync();
    values_[i].push_back(f_integral_.integral() + window_integrals_[i].integral());
  }
}

EnergyObserver::EnergyObserver(double rho, const TestFunction& phi, int n, double v, std::vector<std::size_t> ells)
    : rho_(rho), ells_(std::move(ells)) {
  const std::vector<double> w = phi.lattice_gradient(n);
  const TrigSeries series = v == 0.0 ? TrigSeries{} : phi.gradient_series(n);
  const std::size_t N = phi.lattice_size(n);
  for (std::size_t ell : ells_) {
    if (ell < 1 || ell > N) throw std::invalid_argument("energy: eps n must lie in [1, N]");
    integrals_.push_back(moving_integral(phi, n, v, series, w));
  }
  values_.resize(ells_.size());
}

void EnergyObserver::on_start(const Configuration& eta) {
  const std::size_t N = eta.size();
  windows_.clear();
  for (std::size_t i = 0; i < ells_.size(); ++i) {
    if (N != integrals_[i].size()) throw std::invalid_argument("EnergyObserver: ring size does not match M n");
    windows_.emplace_back(eta, ells_[i]);
    std::vector<double> h(N);
    for (std::size_t x = 0; x < N; ++x) {
      const double dev = windows_[i].sum(x) / static_cast<double>(ells_[i]) - rho_;
      h[x] = dev * dev;
    }
    integrals_[i].reset(std::move(h), 0.0);
  }
}

void EnergyObserver::on_jump(double t, std::size_t from, std::size_t to, const Configuration&) {
  for (std::size_t i = 0; i < ells_.size(); ++i) {
    integrals_[i].advance(t);
    std::size_t changed[2];
    const int c = windows_[i].update(from, to, changed);
    for (int j = 0; j < c; ++j) {
      const double dev = windows_[i].sum(changed[j]) / static_cast<double>(ells_[i]) - rho_;
      integrals_[i].set(changed[j], dev * dev);
    }
  }
}

void EnergyObserver::on_frame(std::size_t, double t, const Configuration&) {
  for (std::size_t i = 0; i < ells_.size(); ++i) {
    integrals_[i].advance(t);
    integrals_[i].resync();
    values_[i].push_back(integrals_[i].integral());
  }
}

double martingale_qv(const Trajectory& traj, const RateSpec& spec, const AsymmetryParams& asym,
                     const TestFunction& phi, double v, double t) {
  if (!traj.initial) throw std::invalid_argument("martingale_qv: trajectory has no jump log");
  if (v != 0.0) throw std::invalid_argument("martingale_qv: replay supports v = 0 only");
  const int n = asym.n;
  Configuration eta = *traj.initial;
  const std::size_t N = eta.size();
  const std::vector<double> grad = phi.lattice_gradient(n);
  auto integrand = [&]() {
    double acc = 0.0;
    for (std::size_t x = 0; x < N; ++x) {
      const int a = eta[x];
      const int b = eta[(x + 1) % N];
      acc += (asym.p * spec.rate(a, b) + asym.q * spec.rate(b, a)) * grad[x] * grad[x];
    }
    return acc / n;
  };
  double acc = 0.0;
  double last = 0.0;
  double current = integrand();
  for (const auto& j : traj.jumps) {
    if (j.t > t) break;
    acc += current * (j.t - last);
    const std::size_t x = j.bond;
    const std::size_t y = (x + 1) % N;
    if (j.dir > 0) {
      eta.jump(x, y);
    } else {
      eta.jump(y, x);
    }
    last = j.t;
    current = integrand();
  }
  return acc + current * (t - last);
}

double frame_trapezoid(const Trajectory& traj, const std::function<double(const Configuration&, double)>& integrand) {
  if (traj.frames.size() < 2) return 0.0;
  double acc = 0.0;
  double prev = integrand(traj.frames[0].eta, traj.frames[0].t);
  for (std::size_t i = 1; i < traj.frames.size(); ++i) {
    const double cur = integrand(traj.frames[i].eta, traj.frames[i].t);
    acc += 0.5 * (prev + cur) * (traj.frames[i].t - traj.frames[i - 1].t);
    prev = cur;
  }
  return acc;
}

double bg2_integrand(const Configuration& eta, const LocalFunction& f, double phi_f_second, double rho,
                     const TestFunction& phi, int n, double v, double t, std::size_t ell) {
  const std::vector<double> w = phi.lattice_values(n, v * t);
  double acc = 0.0;
  for (std::size_t x = 0; x < eta.size(); ++x) {
    const double dev = local_average_field(eta, x, ell) - rho;
    acc += (f.at_site(eta, x) - 0.5 * phi_f_second * dev * dev) * w[x];
  }
  return acc;
}

double energy_integrand(const Configuration& eta, double rho, const TestFunction& phi, int n, double v, double t,
                        std::size_t ell) {
  const std::vector<double> w = phi.lattice_gradient(n, v * t);
  double acc = 0.0;
  for (std::size_t x = 0; x < eta.size(); ++x) {
    const double dev = local_average_field(eta, x, ell) - rho;
    acc += dev * dev * w[x];
  }
  return acc;
}

}  // namespace pep
