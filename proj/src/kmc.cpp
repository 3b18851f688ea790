#include "pep/kmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pep/thermo.hpp"

namespace pep {

void SimulationPlan::validate() const {
  if (N < 2) throw std::invalid_argument("simulation: N must be >= 2");
  if (N > std::numeric_limits<std::uint32_t>::max()) throw std::invalid_argument("simulation: N too large");
  if (!(T >= 0.0)) throw std::invalid_argument("simulation: T must be >= 0");
  if (!initial && !(rho > 0.0 && rho < spec.kappa())) {
    throw std::invalid_argument("rho must lie strictly inside (0, kappa)");
  }
  if (initial && (initial->size() != N || initial->kappa() != spec.kappa())) {
    throw std::invalid_argument("simulation: initial configuration does not match N or kappa");
  }
  if (std::abs(asym.p + asym.q - 1.0) > 1e-12 || asym.p < 0.0 || asym.q < 0.0) {
    throw std::invalid_argument("simulation: need p, q >= 0 with p + q = 1");
  }
  if (!std::is_sorted(observation_times.begin(), observation_times.end())) {
    throw std::invalid_argument("simulation: observation times must be sorted");
  }
  for (double t : observation_times) {
    if (t < 0.0 || t > T) throw std::invalid_argument("simulation: observation times must lie in [0, T]");
  }
}

Configuration sample_initial(const RateSpec& spec, double rho, std::size_t N, Xoshiro256& rng) {
  const ThermoProfile thermo(spec);
  const std::vector<double> p = thermo.marginal_at_density(rho);
  std::vector<double> cdf(p.size());
  double acc = 0.0;
  for (std::size_t m = 0; m < p.size(); ++m) cdf[m] = (acc += p[m]);
  cdf.back() = 1.0;
  std::vector<Occupancy> sites(N);
  for (auto& s : sites) {
    const double u = rng.uniform();
    s = static_cast<Occupancy>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
  }
  return Configuration(spec.kappa(), std::move(sites));
}

Configuration sample_initial(const RateSpec& spec, double rho, std::size_t N, std::uint64_t seed,
                             std::uint64_t replica_id) {
  Xoshiro256 rng(seed, replica_id);
  return sample_initial(spec, rho, N, rng);
}

Simulator::Simulator(const RateSpec& spec, const AsymmetryParams& asym, Configuration initial, Xoshiro256 rng)
    : spec_(spec),
      eta_(std::move(initial)),
      stride_(static_cast<std::size_t>(spec.kappa()) + 1),
      tree_(2 * eta_.size()),
      rng_(rng) {
  if (eta_.kappa() != spec.kappa()) throw std::invalid_argument("Simulator: kappa mismatch");
  const double n2 = static_cast<double>(asym.n) * static_cast<double>(asym.n);
  right_.resize(stride_ * stride_);
  left_.resize(stride_ * stride_);
  for (int a = 0; a <= spec.kappa(); ++a) {
    for (int b = 0; b <= spec.kappa(); ++b) {
      right_[static_cast<std::size_t>(a) * stride_ + static_cast<std::size_t>(b)] = n2 * asym.p * spec.rate(a, b);
      left_[static_cast<std::size_t>(a) * stride_ + static_cast<std::size_t>(b)] = n2 * asym.q * spec.rate(b, a);
    }
  }
  const std::size_t N = eta_.size();
  std::vector<double> w(2 * N);
  for (std::size_t x = 0; x < N; ++x) {
    const std::size_t k = static_cast<std::size_t>(eta_[x]) * stride_ + eta_[(x + 1) % N];
    w[2 * x] = right_[k];
    w[2 * x + 1] = left_[k];
  }
  tree_.assign(w);
}

void Simulator::refresh_bond(std::size_t x) {
  const std::size_t N = eta_.size();
  const std::size_t k = static_cast<std::size_t>(eta_[x]) * stride_ + eta_[(x + 1) % N];
  tree_.set(2 * x, right_[k]);
  tree_.set(2 * x + 1, left_[k]);
}

double Simulator::draw_waiting_time() {
  const double R = tree_.total();
  if (!(R > 0.0)) return std::numeric_limits<double>::infinity();
  return -std::log(rng_.uniform_open0()) / R;
}

Simulator::Event Simulator::apply_event(double t) {
  const std::size_t N = eta_.size();
  const std::size_t leaf = tree_.find(rng_.uniform() * tree_.total());
  const std::size_t x = leaf / 2;
  const std::size_t y = (x + 1) % N;
  const std::size_t from = (leaf % 2 == 0) ? x : y;
  const std::size_t to = (leaf % 2 == 0) ? y : x;
  eta_.jump(from, to);
  refresh_bond((x + N - 1) % N);
  refresh_bond(x);
  refresh_bond(y);
  t_ = t;
  ++jumps_;
  return {from, to, x, leaf % 2 == 0 ? 1 : -1};
}

bool Simulator::step() {
  const double dt = draw_waiting_time();
  if (std::isinf(dt)) return false;
  apply_event(t_ + dt);
  return true;
}

Trajectory run(const SimulationPlan& plan, std::vector<SimulationObserver*> observers) {
  plan.validate();
  Xoshiro256 rng(plan.seed, plan.replica_id);
  Configuration start = plan.initial ? *plan.initial : sample_initial(plan.spec, plan.rho, plan.N, rng);
  Simulator sim(plan.spec, plan.asym, std::move(start), rng);

  Trajectory traj;
  traj.particles = sim.state().particle_count();
  traj.frame_times = plan.observation_times;
  if (plan.keep_jumps) traj.initial = sim.state();
  for (auto* o : observers) o->on_start(sim.state());

  const auto& obs = plan.observation_times;
  std::size_t next = 0;
  auto record = [&](std::size_t i) {
    if (plan.keep_configurations) traj.frames.push_back({obs[i], sim.state()});
    for (auto* o : observers) o->on_frame(i, obs[i], sim.state());
  };

  double t = 0.0;
  while (true) {
    const double dt = sim.draw_waiting_time();
    const double t_next = t + dt;
    // Paths are right-continuous: a frame at time s sees the state before any jump after s.
    while (next < obs.size() && obs[next] < t_next) record(next++);
    if (std::isinf(dt)) {
      traj.frozen = true;
      break;
    }
    if (t_next > plan.T) break;
    const Simulator::Event ev = sim.apply_event(t_next);
    t = t_next;
    if (plan.keep_jumps) {
      traj.jumps.push_back({t, static_cast<std::uint32_t>(ev.bond), static_cast<std::int8_t>(ev.dir)});
    }
    for (auto* o : observers) o->on_jump(t, ev.from, ev.to, sim.state());
  }
  traj.jump_count = sim.jump_count();
  for (auto* o : observers) o->on_finish(plan.T, sim.state());
  return traj;
}

}  // namespace pep
