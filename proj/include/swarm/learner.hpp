#ifndef SWARM_LEARNER_HPP_
#define SWARM_LEARNER_HPP_

#include <Eigen/Dense>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "swarm/env.hpp"
#include "swarm/model.hpp"
#include "swarm/nn.hpp"

namespace swarm::learner {

using Mat = Eigen::MatrixXd;

struct Hyperparams {
  double lr = 1e-4;             // alpha
  double gamma = 0.99;          // discount
  double gae_lambda = 0.95;
  double clip_eps = 0.05;       // epsilon
  int batch_size = 64;          // e
  int buffer_capacity = 50000;  // B, on-policy rollout store cap
  double eta_soft = 0.001;      // target soft-update factor
  int hard_target_interval = 0; // optional tau-style hard copy, 0 = off
  int ppo_epochs = 4;
  double entropy_coef = 0.0;
  double max_grad_norm = 0.5;
  double eta_reg = 0.01;        // expert balance regularizer weight
  double eps_reg = 1e-8;
  int rollout_steps = 2048;     // transitions per update round
  int n_alt = 5;                // game-mode alternation cadence (rounds)
  double curriculum_threshold = 0.6;
  int curriculum_window = 100;

  bool valid() const {
    return gamma >= 0.0 && gamma < 1.0 && clip_eps > 0.0 && clip_eps < 1.0 &&
           gae_lambda >= 0.0 && gae_lambda <= 1.0 && batch_size >= 1 &&
           ppo_epochs >= 1 && rollout_steps >= 1;
  }
};

// One stored decision point: the full observation window, the joint action
// in pre-squash form, and everything PPO needs to recompute its objective.
struct Transition {
  Mat window;                    // (window*n) x obs_dim
  Mat next_window;
  Mat pre_squash;                // n x 3
  Eigen::VectorXd old_logprobs;  // n
  Eigen::VectorXd values;        // n, per-agent V at collection time
  double reward = 0.0;           // normalized team reward
  bool done = false;
  int task = 0;                  // phase one-hot index at decision time
  int n = 0;
  double advantage = 0.0;        // joint, filled by GAE
  double ret = 0.0;
};

struct RolloutBatch {
  std::vector<Transition> data;
  size_t size() const { return data.size(); }
};

// GAE over one trajectory; terminal bootstrap value is 0.
void compute_gae(const std::vector<double>& rewards,
                 const std::vector<double>& values,
                 const std::vector<bool>& dones, double gamma,
                 double gae_lambda, std::vector<double>* advantages,
                 std::vector<double>* returns);

// Normalize advantages in-place to mean 0, std 1.
void normalize_advantages(RolloutBatch& batch);

// Reward scaling by running standard deviation. The running mean is tracked
// and checkpointed alongside, but not subtracted: shifting rewards by a
// constant changes the optimal policy when episode lengths vary.
class RewardNormalizer {
 public:
  double normalize(double r) {
    stat_.push(r);
    return r / (stat_.stddev() + 1e-8);
  }
  double apply_only(double r) const { return r / (stat_.stddev() + 1e-8); }
  nn::RunningStat& stat() { return stat_; }
  const nn::RunningStat& stat() const { return stat_; }

 private:
  nn::RunningStat stat_;
};

// Bellman targets R + gamma * V_target(next), computed once per batch and
// treated as constants by the encoder loss (no gradient through the target).
std::vector<Eigen::VectorXd> bellman_targets(const RolloutBatch& batch,
                                             const model::Policy& policy,
                                             double gamma);

// Per-sample combined loss recorded on a tape; returns component values.
struct LossParts {
  double encoder = 0.0;
  double decoder = 0.0;
  double reg = 0.0;
  double entropy = 0.0;
  double combined = 0.0;
  double approx_kl = 0.0;  // mean(old_logprob - new_logprob)
};

struct LossVars {
  ad::Var total;
  LossParts parts;
};

LossVars combined_loss(ad::Tape& tape, nn::TapeBinding& bind,
                       const model::Policy& policy, const Transition& tr,
                       const Eigen::VectorXd& bellman_target, double a_bound,
                       const Hyperparams& hp);

struct UpdateMetrics {
  LossParts loss;
  double grad_norm = 0.0;
  double approx_kl = 0.0;
  int minibatches = 0;
};

// ppo_epochs passes of shuffled minibatches over the batch; RMSProp step and
// target soft-update after each minibatch. Throws on non-finite loss.
UpdateMetrics update(RolloutBatch& batch, model::Policy& policy,
                     nn::RmsProp& opt, const Hyperparams& hp, double a_bound,
                     Rng& shuffle_rng, bool parallel = true);

// Sliding observation-history window; seeds with the first observation.
class WindowBuffer {
 public:
  WindowBuffer(int window, int n, int obs_dim)
      : window_(window), n_(n), obs_dim_(obs_dim) {}
  void reset(const Mat& first_obs);
  void push(const Mat& obs);
  model::ObservationWindow current() const;

 private:
  int window_, n_, obs_dim_;
  std::deque<Mat> history_;
};

// Scripted controllers stand in when a team has no learned policy.
struct TeamControllers {
  const model::Policy* pursuer = nullptr;  // null: PD chase oracle
  const model::Policy* evader = nullptr;   // null: random-impulse script
  bool stochastic = true;                  // sample vs deterministic means
};

struct EpisodeResult {
  std::vector<Transition> transitions;  // for the collected team
  bool pursuit_success = false;
  bool attach_success = false;
  int capture_step = -1;
  int attach_step = -1;
  int collisions = 0;
  double dv_pursuers = 0.0;     // km/s team total
  std::vector<double> dv_each;  // km/s per pursuer
  double raw_reward = 0.0;      // un-normalized episode return
  int length = 0;
};

enum class CollectTeam { kNone = -1, kPursuer = 0, kEvader = 1 };

// Runs one full episode. When attachment_enabled is false the episode stops
// at capture (pursuit-only curriculum stage). A null normalizer stores raw
// rewards.
EpisodeResult run_episode(env::SwarmEnv& e, const TeamControllers& teams,
                          uint64_t seed, CollectTeam collect,
                          bool attachment_enabled, RewardNormalizer* norm,
                          double evader_reward_sign = -1.0);

// Fills a batch with whole episodes until at least `steps` transitions.
struct CollectStats {
  int episodes = 0;
  int steps = 0;
  double mean_reward = 0.0;  // raw episode return mean
  double success_rate = 0.0; // pursuit success fraction
  double mean_collisions = 0.0;
  std::vector<EpisodeResult> episode_summaries;
};

CollectStats collect_rollouts(env::SwarmEnv& e, const TeamControllers& teams,
                              CollectTeam collect, int steps, uint64_t seed,
                              bool attachment_enabled, RewardNormalizer* norm,
                              RolloutBatch* out, double gamma = 0.99,
                              double gae_lambda = 0.95);

// phi_bar <- (1 - eta) phi_bar + eta phi. Exposed for direct testing; update()
// calls policy.soft_update_target internally.
void soft_update(std::vector<Mat>& target, const std::vector<Mat>& source,
                 double eta_soft);

enum class ScenarioMode { kRandom, kPretrained, kGame };
ScenarioMode parse_scenario(const std::string& s);
std::string scenario_name(ScenarioMode m);

struct EpisodeRow {
  int episode = 0;
  int64_t env_steps = 0;
  double reward = 0.0;
  int collisions = 0;
  bool pursuit_success = false;
  bool attach_success = false;
  bool attachment_enabled = false;
};

struct TrainResult {
  int64_t env_steps = 0;
  int updates = 0;
  std::vector<EpisodeRow> episodes;
  int64_t curriculum_switch_step = -1;  // env step when attachment unlocked
};

struct TrainCallbacks {
  // update index, env steps, metrics, rolling stats
  std::function<void(int, int64_t, const UpdateMetrics&, const CollectStats&)>
      on_update;
  std::function<void(int64_t, const model::Policy&, const RewardNormalizer&)>
      on_checkpoint;
  int checkpoint_interval = 0;  // updates between checkpoints, 0 = off
};

// Algorithm-level training loop: rollouts, GAE, combined update, curriculum
// gating, and the three evader-scenario schedules.
class Trainer {
 public:
  Trainer(const env::EnvConfig& env_cfg, const model::ModelConfig& model_cfg,
          const Hyperparams& hp, uint64_t seed);

  // Trains pursuers (and, per mode, evaders) for up to total_steps
  // environment transitions.
  TrainResult run(ScenarioMode mode, int64_t total_steps,
                  const TrainCallbacks& cb = {});

  model::Policy& pursuer_policy() { return *pursuer_; }
  model::Policy* evader_policy() { return evader_.get(); }
  RewardNormalizer& reward_norm() { return norm_; }
  int64_t start_step = 0;  // for resume: offsets env-step accounting

 private:
  int64_t train_team(CollectTeam team, int64_t budget, int64_t step_base,
                     const TrainCallbacks& cb, const TeamControllers& teams,
                     TrainResult* result, bool curriculum);

  env::EnvConfig env_cfg_;
  model::ModelConfig model_cfg_;
  Hyperparams hp_;
  uint64_t seed_;
  std::unique_ptr<model::Policy> pursuer_;
  std::unique_ptr<model::Policy> evader_;
  std::unique_ptr<nn::RmsProp> opt_p_, opt_e_;
  RewardNormalizer norm_;
  RewardNormalizer norm_e_;
  bool attachment_enabled_ = false;
  double r_pe_train_ = 0.0;  // capture-radius curriculum, meters
  int m_train_ = 1;          // team-size curriculum, pursuer count
  std::deque<int> recent_success_;
};

}  // namespace swarm::learner

#endif  // SWARM_LEARNER_HPP_
