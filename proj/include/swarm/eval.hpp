#ifndef SWARM_EVAL_HPP_
#define SWARM_EVAL_HPP_

#include <cstdint>
#include <vector>

#include "swarm/env.hpp"
#include "swarm/learner.hpp"

namespace swarm::eval {

// Binomial success counter with Wilson score intervals.
struct SuccessStats {
  int successes = 0;
  int episodes = 0;

  double rate() const { return episodes > 0 ? double(successes) / episodes : 0.0; }
  double wilson_lo(double z = 1.96) const;
  double wilson_hi(double z = 1.96) const;
};

struct EvalSummary {
  SuccessStats pursuit;
  SuccessStats attach;
  double mean_collisions = 0.0;
  double mean_length = 0.0;
  double mean_dv = 0.0;            // km/s, pursuer team total per episode
  double max_dv = 0.0;
  double incomplete_fraction = 0.0;  // timed out without capture or failure
  std::vector<learner::EpisodeResult> episodes;
};

// Monte Carlo evaluation over independent episodes; each episode gets its
// own environment instance so runs are order-independent. `parallel` selects
// the OpenMP path; the serial path is the reference implementation.
EvalSummary monte_carlo(const env::EnvConfig& cfg,
                        const learner::TeamControllers& teams, int episodes,
                        uint64_t seed, bool parallel = true);

// Baseline that draws pursuer accelerations uniformly in the bound ball.
EvalSummary random_baseline(const env::EnvConfig& cfg, int episodes,
                            uint64_t seed, bool parallel = true);

// Propellant use across a batch of finished episodes.
struct FuelReport {
  double mean_total = 0.0;  // km/s, summed over the team
  double max_total = 0.0;
  double mean_per_agent = 0.0;
};
FuelReport fuel_accounting(const std::vector<learner::EpisodeResult>& eps,
                           int n_agents);

// Non-overlapping block means of width `window`; the tail block may be
// shorter. Exactly mean-preserving when the input length divides evenly.
std::vector<double> collision_curve(const std::vector<double>& per_episode,
                                    int window);

double incomplete_fraction(const std::vector<learner::EpisodeResult>& eps);

// One-sided two-proportion z-test that rate a exceeds rate b.
struct ZTest {
  double z = 0.0;
  double p_value = 1.0;
};
ZTest two_proportion_z(int success_a, int n_a, int success_b, int n_b);

struct SweepRow {
  int m = 0;
  SuccessStats policy;
  SuccessStats baseline;
  ZTest test;
};

// Evaluates one trained pursuer policy across team sizes against the random
// baseline. All team sizes must fit the policy's m_max layout.
std::vector<SweepRow> scalability_sweep(const env::EnvConfig& base_cfg,
                                        const model::Policy& policy,
                                        const std::vector<int>& team_sizes,
                                        int episodes, uint64_t seed);

// Sequential advantage decomposition on a random one-shot toy game:
// A(s, a^{1:n}) = sum_j [Q(s, a^{1:j}) - Q(s, a^{1:j-1})], with the partial
// Q's computed by exhaustive expectation under a random product policy.
// Returns the maximum absolute residual over every joint action.
double verify_decomposition(int n_agents, int n_actions, uint64_t seed);

}  // namespace swarm::eval

#endif  // SWARM_EVAL_HPP_
