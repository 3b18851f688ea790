#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pep/rate_spec.hpp"
#include "pep/rng.hpp"
#include "pep/sum_tree.hpp"

namespace pep {

struct SimulationPlan {
  RateSpec spec = RateSpec::sep(1);
  AsymmetryParams asym;             // n sets the diffusive factor n^2 on all rates
  std::size_t N = 2;                // ring size
  double rho = 0.5;
  double T = 0.0;                   // macroscopic horizon
  std::vector<double> observation_times;  // sorted, inside [0, T]
  std::uint64_t seed = 0;
  std::uint64_t replica_id = 0;
  bool keep_configurations = true;  // store a Configuration per frame
  bool keep_jumps = false;          // store the jump log
  std::optional<Configuration> initial;  // otherwise sampled from nu_rho

  /// Throws std::invalid_argument on an inconsistent plan.
  void validate() const;
};

struct Frame {
  double t;
  Configuration eta;
};

struct JumpRecord {
  double t;
  std::uint32_t bond;  // bond (x, x+1)
  std::int8_t dir;     // +1 right (x -> x+1), -1 left (x+1 -> x)
};

struct Trajectory {
  std::vector<Frame> frames;
  std::vector<JumpRecord> jumps;
  std::optional<Configuration> initial;  // kept together with the jump log
  std::vector<double> frame_times;  // always filled, even when configurations are not kept
  std::uint64_t jump_count = 0;
  bool frozen = false;  // total rate hit zero; remaining frames repeat the frozen state
  std::int64_t particles = 0;
};

/// Hooks called from inside Simulator::run, in time order.
class SimulationObserver {
 public:
  virtual ~SimulationObserver() = default;
  virtual void on_start(const Configuration& /*eta*/) {}
  /// After a jump at time t moving one particle from -> to; eta is the new state.
  virtual void on_jump(double /*t*/, std::size_t /*from*/, std::size_t /*to*/, const Configuration& /*eta*/) {}
  /// Configuration in force at observation time t.
  virtual void on_frame(std::size_t /*index*/, double /*t*/, const Configuration& /*eta*/) {}
  virtual void on_finish(double /*T*/, const Configuration& /*eta*/) {}
};

/// I.i.d. sites from the nu_rho marginal by inverse CDF.
Configuration sample_initial(const RateSpec& spec, double rho, std::size_t N, Xoshiro256& rng);
Configuration sample_initial(const RateSpec& spec, double rho, std::size_t N, std::uint64_t seed,
                             std::uint64_t replica_id = 0);

/// Exact Gillespie dynamics on a ring with 2N directed-bond clocks in a sum tree.
/// Leaf 2x: right jump across bond x at n^2 p r(eta_x, eta_{x+1});
/// leaf 2x+1: left jump across bond x at n^2 q r(eta_{x+1}, eta_x).
class Simulator {
 public:
  Simulator(const RateSpec& spec, const AsymmetryParams& asym, Configuration initial, Xoshiro256 rng);

  const Configuration& state() const noexcept { return eta_; }
  double time() const noexcept { return t_; }
  double total_rate() const noexcept { return tree_.total(); }
  double bond_rate(std::size_t leaf) const noexcept { return tree_.leaf(leaf); }
  std::uint64_t jump_count() const noexcept { return jumps_; }

  /// Waiting time to the next event, or +inf if frozen. Does not change the state.
  double draw_waiting_time();
  struct Event {
    std::size_t from;
    std::size_t to;
    std::size_t bond;
    int dir;  // +1 right, -1 left
  };
  /// Picks an event proportional to rate and applies it at time t.
  Event apply_event(double t);

  /// One full event: time advance and jump. Returns false if frozen.
  bool step();

 private:
  void refresh_bond(std::size_t x);

  RateSpec spec_;
  Configuration eta_;
  std::vector<double> right_;  // (kappa+1)^2 scaled rate tables
  std::vector<double> left_;
  std::size_t stride_;
  SumTree tree_;
  Xoshiro256 rng_;
  double t_ = 0.0;
  std::uint64_t jumps_ = 0;
};

/// Runs a plan to its horizon. One stream Xoshiro256(seed, replica_id) draws the initial
/// configuration (unless given) and then drives the dynamics.
Trajectory run(const SimulationPlan& plan, std::vector<SimulationObserver*> observers = {});

}  // namespace pep
