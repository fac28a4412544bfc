#ifndef SWARM_MODEL_HPP_
#define SWARM_MODEL_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "swarm/nn.hpp"
#include "swarm/rng.hpp"
#include "swarm/tape.hpp"

namespace swarm::model {

using Mat = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;

struct ModelConfig {
  int d_model = 64;
  int n_heads = 2;
  int n_blocks_enc = 2;
  int n_blocks_dec = 2;
  int window = 3;
  int m_max = 5;
  int k_max = 2;
  int obs_dim = 46;
  int action_dim = 3;
  int n_experts = 2;   // pursuit, attachment
  bool mean_pool_time = false;  // default: last-timestep token per agent

  bool valid() const {
    return d_model > 0 && n_heads > 0 && d_model % n_heads == 0 &&
           window >= 1 && n_blocks_enc >= 1 && n_blocks_dec >= 1 &&
           m_max >= 1 && obs_dim > 0 && n_experts >= 1;
  }
  uint64_t layout_hash() const;
};

// Joint-observation history fed to the encoder: rows indexed time-major,
// row(t*n + i) = observation of agent i at window slot t (oldest first).
// Missing history at episode start repeats the first observation.
struct ObservationWindow {
  Mat rows;  // (window * n) x obs_dim
  int n = 0;
  int window = 0;
};

struct EncodeOut {
  ad::Var reps;    // n x d_model
  ad::Var values;  // n x 1
};

struct MixOut {
  ad::Var h;      // 1 x d_model
  ad::Var alpha;  // 1 x n_experts
};

struct DecodeOut {
  ad::Var logprobs;   // n x 1, includes tanh-squash correction
  ad::Var entropies;  // n x 1, base Gaussian entropy (pre-squash)
};

struct ActSample {
  Vec3 action;   // env scale, norm-bounded by a_bound after tanh
  Vec3 pre_squash;
  double logprob = 0.0;
};

// Encoder-decoder sequence policy with a soft expert-mixture context.
// Forward passes record onto a caller-owned tape; parameter mutation is the
// caller's concern (single writer).
class Policy {
 public:
  Policy(const ModelConfig& cfg, uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  EncodeOut encode(ad::Tape& t, nn::TapeBinding& bind,
                   const ObservationWindow& w) const;

  // Expert mixture conditioned on the task phase (0 pursuit, 1 attachment).
  MixOut mixture(ad::Tape& t, nn::TapeBinding& bind, ad::Var reps,
                 int task) const;

  // Teacher-forced parallel pass over a full joint action (n x 3 pre-squash).
  DecodeOut decode_logprobs(ad::Tape& t, nn::TapeBinding& bind, ad::Var reps,
                            ad::Var h, const Mat& pre_squash, int n,
                            double a_bound) const;

  // Autoregressive single-agent step. prev_pre_squash holds rows for agents
  // 0..m-1. rng == nullptr selects the deterministic (squashed mean) action.
  ActSample decode_act(ad::Tape& t, nn::TapeBinding& bind, ad::Var reps,
                       ad::Var h, const Mat& prev_pre_squash, int agent_index,
                       Rng* rng, double a_bound) const;

  // Per-agent values from the target value head (treated as constants).
  Eigen::VectorXd target_values(const ObservationWindow& w) const;

  // phi_bar <- (1 - eta) phi_bar + eta phi over the value-head parameters.
  void soft_update_target(double eta_soft);
  void hard_update_target();

  const std::vector<int>& value_head_indices() const { return vhead_idx_; }
  const std::vector<Mat>& target_value_params() const { return target_vhead_; }
  void set_target_value_params(std::vector<Mat> v) { target_vhead_ = std::move(v); }

  static double gaussian_entropy(const Eigen::Vector3d& log_std);

 private:
  ad::Var encoder_blocks(ad::Tape& t, nn::TapeBinding& bind, ad::Var tokens,
                         int n_tokens) const;
  ad::Var value_head(ad::Tape& t, nn::TapeBinding& bind, ad::Var reps) const;
  ad::Var decoder_tokens_out(ad::Tape& t, nn::TapeBinding& bind, ad::Var reps,
                             ad::Var h, const Mat& pre_squash_prefix,
                             int n_tokens) const;
  ad::Var attention(ad::Tape& t, nn::TapeBinding& bind,
                    const std::string& prefix, ad::Var xq, ad::Var xkv,
                    const Mat* mask) const;

  ModelConfig cfg_;
  nn::ParamStore params_;
  std::vector<int> vhead_idx_;
  std::vector<Mat> target_vhead_;
};

}  // namespace swarm::model

#endif  // SWARM_MODEL_HPP_
