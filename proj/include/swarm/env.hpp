#ifndef SWARM_ENV_HPP_
#define SWARM_ENV_HPP_

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "swarm/orbit.hpp"
#include "swarm/queue.hpp"
#include "swarm/rng.hpp"

namespace swarm::env {

using Mat = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;
using orbit::ControlAccel;
using orbit::LvlhState;
using orbit::OrbitParams;

enum class Phase { kPursuit = 0, kAttachment = 1, kDoneSuccess = 2, kDoneFailure = 3 };

struct RewardWeights {
  double w_d = 1.0;     // distance-decrease shaping
  double w_cap = 10.0;  // capture bonus
  double w_att = 20.0;  // attachment bonus
  double w_col = 5.0;   // per collision
  double w_bnd = 5.0;   // per boundary exit
  double w_fuel = 0.1;  // per sum ||a|| dt
  double r_max = 100.0;
};

struct EnvConfig {
  int m = 3;      // pursuers
  int k = 1;      // evaders
  int m_max = 5;  // observation layout capacities
  int k_max = 2;

  double l_r = 500.0;       // arena half-extent per axis, km
  double r_p = 1.5;         // pursuer radius, m
  double r_e = 1.0;         // evader radius, m
  double r_pe = 50.0;       // attachment task (capture) radius, m
  double varpi_min = 0.1;   // minimum tolerance distance, m
  double v_max = 10.0;      // speed cap, km/s
  double v_dock = 0.5;      // attachment relative-speed gate, m/s
  int T0 = 1000;            // task time window, steps
  double dt = 1.0;          // s
  double a_max_p = 2e-3;    // pursuer acceleration bound, km/s^2
  double evader_gain = 1.2; // evader bound multiplier
  double p_imp = 0.1;       // random-impulse probability per step
  bool require_all = true;  // capture needs all pursuers inside r_pe

  OrbitParams orbit = OrbitParams::geo();
  queue::QueueParams queue;
  RewardWeights reward;

  double evader_bound() const { return evader_gain * a_max_p; }
  // Velocity scale used to normalize observations: the characteristic
  // maneuvering speed sqrt(a_max * l_r), i.e. the speed reached by a full
  // burn across the arena. Using this rather than a_max*dt*T0 keeps the
  // velocity features the same order of magnitude as the position features.
  double v_scale() const { return std::sqrt(a_max_p * l_r); }
  bool valid() const;

  // Fixed per-agent observation layout:
  // own state (6) | teammates ((team_max-1)*6, zero padded) |
  // opponents (opp_max*6, zero padded) | backlog (1) | phase one-hot (2) |
  // time remaining (1)
  static int obs_dim_for(int team_max, int opp_max) {
    return 6 + 6 * (team_max - 1) + 6 * opp_max + 1 + 2 + 1;
  }
  int pursuer_obs_dim() const { return obs_dim_for(m_max, k_max); }
  int evader_obs_dim() const { return obs_dim_for(k_max, m_max); }
};

struct EventSet {
  bool capture = false;          // phase transition fired this step
  bool attach_success = false;
  int collisions = 0;            // pursuer-pursuer contacts
  int boundary_exits = 0;        // pursuers leaving the box
  bool evader_out = false;       // evader driven past the boundary
};

struct StepResult {
  Mat obs;                    // m x pursuer_obs_dim
  double reward = 0.0;
  Eigen::VectorXd per_agent;  // diagnostic breakdown (equal split of team reward)
  bool done = false;
  EventSet events;
  Phase phase = Phase::kPursuit;
  double dv_step = 0.0;       // km/s spent by pursuers this step
  double shaping = 0.0;       // weighted distance-decrease component
};

enum class EvaderKind { kRandomImpulse };

// Random-impulse evader: full-bound thrust in a uniform random direction
// with probability p_imp, else coast. Near the arena edge it burns back
// toward the center instead (being pushed out counts as a loss for it).
ControlAccel scripted_evader(EvaderKind kind, double p_imp, double bound,
                             Rng& rng, const orbit::LvlhState& self,
                             double l_r);

// PD chase controller used as an evaluation sanity oracle.
ControlAccel pd_pursuer(const LvlhState& self, const LvlhState& target,
                        double a_max, double dt);

// Event detection against the current states. `assignment[i]` is the evader
// index pursued by pursuer i; `attached`/`captured` carry per-evader status.
EventSet detect_events(const std::vector<LvlhState>& pursuers,
                       const std::vector<LvlhState>& evaders,
                       const std::vector<int>& assignment,
                       std::vector<bool>& captured, std::vector<bool>& attached,
                       Phase phase, const EnvConfig& cfg);

// Multi-pursuer, multi-evader pursuit-attachment arena. Single writer per
// instance; all randomness derives from the reset seed.
class SwarmEnv {
 public:
  explicit SwarmEnv(const EnvConfig& cfg);

  Mat reset(uint64_t seed);

  // Pursuer actions m x 3 (km/s^2). Evader actions k x 3 when externally
  // controlled; nullptr selects the scripted random-impulse evader.
  StepResult step(const Mat& pursuer_actions, const Mat* evader_actions = nullptr);

  const EnvConfig& config() const { return cfg_; }
  Phase phase() const { return phase_; }
  bool done() const;
  int time_step() const { return t_; }
  const std::vector<LvlhState>& pursuers() const { return pursuers_; }
  const std::vector<LvlhState>& evaders() const { return evaders_; }
  const std::vector<Vec3>& last_pursuer_accels() const { return last_acc_p_; }
  const std::vector<Vec3>& last_evader_accels() const { return last_acc_e_; }
  const queue::QueueState& backlog() const { return queue_; }

  Mat pursuer_observation() const;
  Mat evader_observation() const;

 private:
  Vec3 clip_norm(const Vec3& v, double bound) const;
  std::vector<int> assign_targets() const;

  EnvConfig cfg_;
  orbit::DiscreteTransition transition_;
  std::vector<LvlhState> pursuers_;
  std::vector<LvlhState> evaders_;
  std::vector<Vec3> last_acc_p_, last_acc_e_;
  std::vector<bool> captured_, attached_;
  queue::QueueState queue_;
  Phase phase_ = Phase::kPursuit;
  int t_ = 0;
  Rng placement_rng_;
  std::vector<Rng> evader_rng_;
};

}  // namespace swarm::env

#endif  // SWARM_ENV_HPP_
