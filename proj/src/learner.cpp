#include "swarm/learner.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace swarm::learner {

namespace {
constexpr double kRadiusStartFraction = 0.3;  // of the arena half-extent
constexpr double kRadiusShrink = 0.7;         // per cleared curriculum gate
}  // namespace

using env::Phase;
using env::SwarmEnv;
using model::ObservationWindow;
using model::Policy;

void compute_gae(const std::vector<double>& rewards,
                 const std::vector<double>& values,
                 const std::vector<bool>& dones, double gamma,
                 double gae_lambda, std::vector<double>* advantages,
                 std::vector<double>* returns) {
  const size_t T = rewards.size();
  if (values.size() != T || dones.size() != T) {
    throw std::invalid_argument("compute_gae: length mismatch");
  }
  advantages->assign(T, 0.0);
  returns->assign(T, 0.0);
  double gae = 0.0;
  for (size_t i = T; i-- > 0;) {
    const double not_done = dones[i] ? 0.0 : 1.0;
    const double next_v = (i + 1 < T) ? values[i + 1] : 0.0;
    const double delta = rewards[i] + gamma * next_v * not_done - values[i];
    gae = delta + gamma * gae_lambda * not_done * gae;
    (*advantages)[i] = gae;
    (*returns)[i] = gae + values[i];
  }
}

void normalize_advantages(RolloutBatch& batch) {
  if (batch.data.empty()) return;
  double mean = 0.0;
  for (const auto& tr : batch.data) mean += tr.advantage;
  mean /= batch.data.size();
  double var = 0.0;
  for (const auto& tr : batch.data) {
    const double d = tr.advantage - mean;
    var += d * d;
  }
  const double sd = std::sqrt(var / batch.data.size()) + 1e-8;
  for (auto& tr : batch.data) tr.advantage = (tr.advantage - mean) / sd;
}

std::vector<Eigen::VectorXd> bellman_targets(const RolloutBatch& batch,
                                             const Policy& policy,
                                             double gamma) {
  std::vector<Eigen::VectorXd> targets(batch.data.size());
  const int64_t n_samples = static_cast<int64_t>(batch.data.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n_samples; ++i) {
    const Transition& tr = batch.data[i];
    ObservationWindow next;
    next.rows = tr.next_window;
    next.n = tr.n;
    next.window = policy.config().window;
    Eigen::VectorXd v_next = tr.done
        ? Eigen::VectorXd::Zero(tr.n)
        : policy.target_values(next);
    targets[i] = Eigen::VectorXd::Constant(tr.n, tr.reward) + gamma * v_next;
  }
  return targets;
}

LossVars combined_loss(ad::Tape& tape, nn::TapeBinding& bind,
                       const Policy& policy, const Transition& tr,
                       const Eigen::VectorXd& bellman_target, double a_bound,
                       const Hyperparams& hp) {
  ObservationWindow w;
  w.rows = tr.window;
  w.n = tr.n;
  w.window = policy.config().window;

  auto enc = policy.encode(tape, bind, w);
  auto mix = policy.mixture(tape, bind, enc.reps, tr.task);
  auto dec = policy.decode_logprobs(tape, bind, enc.reps, mix.h, tr.pre_squash,
                                    tr.n, a_bound);

  // Encoder Bellman error against the frozen targets.
  ad::Var v_err = ad::add_const(tape, enc.values, Mat(-bellman_target));
  ad::Var l_enc = ad::mean(tape, ad::square(tape, v_err));

  // Clipped surrogate on the importance ratio.
  ad::Var log_ratio = ad::add_const(tape, dec.logprobs, Mat(-tr.old_logprobs));
  ad::Var ratio = ad::exp_op(tape, log_ratio);
  ad::Var s1 = ad::scale(tape, ratio, tr.advantage);
  ad::Var s2 = ad::scale(
      tape, ad::clamp(tape, ratio, 1.0 - hp.clip_eps, 1.0 + hp.clip_eps),
      tr.advantage);
  ad::Var l_dec = ad::scale(tape, ad::mean(tape, ad::min_op(tape, s1, s2)), -1.0);

  // Expert balance: -(eta/M) sum_j log(alpha_j + eps).
  const int M = policy.config().n_experts;
  ad::Var shifted = ad::add_const(tape, mix.alpha, Mat::Constant(1, M, hp.eps_reg));
  ad::Var l_reg = ad::scale(tape, ad::sum(tape, ad::log_op(tape, shifted)),
                            -hp.eta_reg / M);

  ad::Var ent = ad::mean(tape, dec.entropies);
  ad::Var total = ad::add(tape, ad::add(tape, l_enc, l_dec), l_reg);
  if (hp.entropy_coef != 0.0) {
    total = ad::sub(tape, total, ad::scale(tape, ent, hp.entropy_coef));
  }

  LossVars out;
  out.total = total;
  out.parts.encoder = tape.scalar(l_enc);
  out.parts.decoder = tape.scalar(l_dec);
  out.parts.reg = tape.scalar(l_reg);
  out.parts.entropy = tape.scalar(ent);
  out.parts.combined = tape.scalar(total);
  out.parts.approx_kl = -tape.value(log_ratio).mean();
  return out;
}

UpdateMetrics update(RolloutBatch& batch, Policy& policy, nn::RmsProp& opt,
                     const Hyperparams& hp, double a_bound, Rng& shuffle_rng,
                     bool parallel) {
  UpdateMetrics metrics;
  if (batch.data.empty()) return metrics;
  normalize_advantages(batch);
  const auto targets = bellman_targets(batch, policy, hp.gamma);

  std::vector<size_t> order(batch.data.size());
  std::iota(order.begin(), order.end(), 0);

  const int n_threads = parallel ? omp_get_max_threads() : 1;
  std::vector<nn::GradStore> thread_grads;
  for (int i = 0; i < n_threads; ++i) thread_grads.emplace_back(policy.params());

  double kl_sum = 0.0;
  int kl_count = 0;
  int step_count = 0;

  for (int epoch = 0; epoch < hp.ppo_epochs; ++epoch) {
    // Fisher-Yates with the caller's stream.
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }
    for (size_t start = 0; start < order.size(); start += hp.batch_size) {
      const size_t end = std::min(order.size(), start + hp.batch_size);
      const int count = static_cast<int>(end - start);
      for (auto& g : thread_grads) g.zero();
      std::vector<LossParts> parts(count);

#pragma omp parallel for schedule(static) num_threads(n_threads)
      for (int b = 0; b < count; ++b) {
        const Transition& tr = batch.data[order[start + b]];
        ad::Tape tape;
        nn::TapeBinding bind(tape, policy.params());
        LossVars lv = combined_loss(tape, bind, policy, tr,
                                    targets[order[start + b]], a_bound, hp);
        if (!std::isfinite(lv.parts.combined)) {
          throw std::runtime_error("update: non-finite loss at sample " +
                                   std::to_string(order[start + b]));
        }
        tape.backward(lv.total);
        bind.accumulate(thread_grads[omp_get_thread_num()]);
        parts[b] = lv.parts;
      }
      nn::GradStore grads(policy.params());
      for (const auto& g : thread_grads) grads.add(g);
      grads.scale(1.0 / count);
      grads.clip_global_norm(hp.max_grad_norm);
      metrics.grad_norm = grads.global_norm();
      opt.step(policy.params(), grads);
      policy.soft_update_target(hp.eta_soft);
      ++step_count;
      if (hp.hard_target_interval > 0 &&
          step_count % hp.hard_target_interval == 0) {
        policy.hard_update_target();
      }
      for (const auto& p : parts) {
        metrics.loss.encoder += p.encoder;
        metrics.loss.decoder += p.decoder;
        metrics.loss.reg += p.reg;
        metrics.loss.entropy += p.entropy;
        metrics.loss.combined += p.combined;
        kl_sum += p.approx_kl;
      }
      kl_count += count;
      ++metrics.minibatches;
    }
  }
  const double denom = std::max(1, kl_count);
  metrics.loss.encoder /= denom;
  metrics.loss.decoder /= denom;
  metrics.loss.reg /= denom;
  metrics.loss.entropy /= denom;
  metrics.loss.combined /= denom;
  metrics.approx_kl = kl_sum / denom;
  return metrics;
}

void soft_update(std::vector<Mat>& target, const std::vector<Mat>& source,
                 double eta_soft) {
  if (target.size() != source.size()) {
    throw std::invalid_argument("soft_update: shape mismatch");
  }
  for (size_t i = 0; i < target.size(); ++i) {
    if (target[i].rows() != source[i].rows() ||
        target[i].cols() != source[i].cols()) {
      throw std::invalid_argument("soft_update: shape mismatch");
    }
    target[i] = (1.0 - eta_soft) * target[i] + eta_soft * source[i];
  }
}

void WindowBuffer::reset(const Mat& first_obs) {
  history_.clear();
  for (int i = 0; i < window_; ++i) history_.push_back(first_obs);
}

void WindowBuffer::push(const Mat& obs) {
  history_.push_back(obs);
  while (static_cast<int>(history_.size()) > window_) history_.pop_front();
}

ObservationWindow WindowBuffer::current() const {
  ObservationWindow w;
  w.n = n_;
  w.window = window_;
  w.rows = Mat(window_ * n_, obs_dim_);
  for (int t = 0; t < window_; ++t) {
    w.rows.middleRows(t * n_, n_) = history_[t];
  }
  return w;
}

namespace {

struct PolicyAct {
  Mat pre_squash;             // n x 3
  Mat actions;                // n x 3, env scale
  Eigen::VectorXd logprobs;   // n
  Eigen::VectorXd values;     // n
};

PolicyAct act_with_policy(const Policy& policy, const ObservationWindow& w,
                          int task, double a_bound, Rng* rng) {
  ad::Tape tape;
  nn::TapeBinding bind(tape, policy.params());
  auto enc = policy.encode(tape, bind, w);
  auto mix = policy.mixture(tape, bind, enc.reps, task);
  const int n = w.n;
  PolicyAct out;
  out.pre_squash = Mat::Zero(n, 3);
  out.actions = Mat::Zero(n, 3);
  out.logprobs.resize(n);
  for (int m = 0; m < n; ++m) {
    auto s = policy.decode_act(tape, bind, enc.reps, mix.h, out.pre_squash, m,
                               rng, a_bound);
    out.pre_squash.row(m) = s.pre_squash.transpose();
    out.actions.row(m) = s.action.transpose();
    out.logprobs[m] = s.logprob;
  }
  out.values = tape.value(enc.values).col(0);
  return out;
}

}  // namespace

EpisodeResult run_episode(SwarmEnv& e, const TeamControllers& teams,
                          uint64_t seed, CollectTeam collect,
                          bool attachment_enabled, RewardNormalizer* norm,
                          double /*evader_reward_sign*/) {
  const auto& cfg = e.config();
  EpisodeResult result;
  result.dv_each.assign(cfg.m, 0.0);

  Mat obs = e.reset(seed);
  Rng act_rng_p(derive_seed(seed, 40, 0));
  Rng act_rng_e(derive_seed(seed, 41, 0));

  const int p_window = teams.pursuer ? teams.pursuer->config().window : 1;
  const int e_window = teams.evader ? teams.evader->config().window : 1;
  WindowBuffer wb_p(p_window, cfg.m, cfg.pursuer_obs_dim());
  WindowBuffer wb_e(e_window, cfg.k, cfg.evader_obs_dim());
  wb_p.reset(obs);
  if (teams.evader) wb_e.reset(e.evader_observation());

  while (!e.done()) {
    const Phase phase = e.phase();
    const int task = phase == Phase::kAttachment ? 1 : 0;

    // Pursuer side.
    PolicyAct pact;
    Mat p_actions(cfg.m, 3);
    ObservationWindow pw;
    if (teams.pursuer) {
      pw = wb_p.current();
      pact = act_with_policy(*teams.pursuer, pw, task, cfg.a_max_p,
                             teams.stochastic ? &act_rng_p : nullptr);
      p_actions = pact.actions;
    } else {
      // PD oracle chases the nearest evader.
      for (int i = 0; i < cfg.m; ++i) {
        int best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (int j = 0; j < cfg.k; ++j) {
          const double d =
              (e.pursuers()[i].position() - e.evaders()[j].position()).norm();
          if (d < bd) {
            bd = d;
            best = j;
          }
        }
        p_actions.row(i) =
            env::pd_pursuer(e.pursuers()[i], e.evaders()[best], cfg.a_max_p,
                            cfg.dt).a.transpose();
      }
    }

    // Evader side.
    PolicyAct eact;
    Mat e_actions(cfg.k, 3);
    ObservationWindow ew;
    const bool evader_policy = teams.evader != nullptr;
    if (evader_policy) {
      ew = wb_e.current();
      eact = act_with_policy(*teams.evader, ew, task, cfg.evader_bound(),
                             teams.stochastic ? &act_rng_e : nullptr);
      e_actions = eact.actions;
    }

    auto res = e.step(p_actions, evader_policy ? &e_actions : nullptr);
    ++result.length;
    result.collisions += res.events.collisions;
    result.dv_pursuers += res.dv_step;
    for (int i = 0; i < cfg.m; ++i) {
      result.dv_each[i] += e.last_pursuer_accels()[i].norm() * cfg.dt;
    }
    if (res.events.capture) result.capture_step = result.length;
    if (res.phase == Phase::kDoneSuccess) result.attach_step = result.length;

    const bool curriculum_stop =
        !attachment_enabled && res.phase == Phase::kAttachment;
    const bool terminal = res.done || curriculum_stop;

    wb_p.push(res.obs);
    if (evader_policy) wb_e.push(e.evader_observation());

    if (collect == CollectTeam::kPursuer && teams.pursuer) {
      Transition tr;
      tr.window = pw.rows;
      tr.next_window = wb_p.current().rows;
      tr.pre_squash = pact.pre_squash;
      tr.old_logprobs = pact.logprobs;
      tr.values = pact.values;
      tr.reward = norm ? norm->normalize(res.reward) : res.reward;
      tr.done = terminal;
      tr.task = task;
      tr.n = cfg.m;
      result.transitions.push_back(std::move(tr));
      result.raw_reward += res.reward;
    } else if (collect == CollectTeam::kEvader && teams.evader) {
      // Evader objective: oppose the pursuers' shaping and capture terms,
      // pay for fuel, and avoid contacts.
      double dv_e = 0.0;
      for (int j = 0; j < cfg.k; ++j) {
        dv_e += e.last_evader_accels()[j].norm() * cfg.dt;
      }
      int contacts = 0;
      const double contact = (cfg.r_p + cfg.r_e + cfg.varpi_min) * 1e-3;
      for (int j = 0; j < cfg.k; ++j) {
        for (int i = 0; i < cfg.m; ++i) {
          if ((e.pursuers()[i].position() - e.evaders()[j].position()).norm() <
              contact) {
            ++contacts;
          }
        }
      }
      double r_e = -(res.shaping +
                     (res.events.capture ? cfg.reward.w_cap : 0.0)) -
                   cfg.reward.w_fuel * dv_e - cfg.reward.w_col * contacts;
      Transition tr;
      tr.window = ew.rows;
      tr.next_window = wb_e.current().rows;
      tr.pre_squash = eact.pre_squash;
      tr.old_logprobs = eact.logprobs;
      tr.values = eact.values;
      tr.reward = norm ? norm->normalize(r_e) : r_e;
      tr.done = terminal;
      tr.task = task;
      tr.n = cfg.k;
      result.transitions.push_back(std::move(tr));
      result.raw_reward += r_e;
    } else {
      result.raw_reward += res.reward;
    }

    if (curriculum_stop) break;
  }
  result.pursuit_success = result.capture_step >= 0;
  result.attach_success = e.phase() == Phase::kDoneSuccess;
  return result;
}

CollectStats collect_rollouts(SwarmEnv& e, const TeamControllers& teams,
                              CollectTeam collect, int steps, uint64_t seed,
                              bool attachment_enabled, RewardNormalizer* norm,
                              RolloutBatch* out, double gamma,
                              double gae_lambda) {
  CollectStats stats;
  int successes = 0;
  while (stats.steps < steps) {
    EpisodeResult ep = run_episode(e, teams, derive_seed(seed, 7, stats.episodes),
                                   collect, attachment_enabled, norm);
    // GAE over the fresh episode, which always ends terminal.
    if (!ep.transitions.empty() && out) {
      std::vector<double> rewards, values;
      std::vector<bool> dones;
      for (const auto& tr : ep.transitions) {
        rewards.push_back(tr.reward);
        values.push_back(tr.values.mean());  // joint value: per-agent mean
        dones.push_back(tr.done);
      }
      std::vector<double> adv, ret;
      compute_gae(rewards, values, dones, gamma, gae_lambda, &adv, &ret);
      for (size_t i = 0; i < ep.transitions.size(); ++i) {
        ep.transitions[i].advantage = adv[i];
        ep.transitions[i].ret = ret[i];
        out->data.push_back(std::move(ep.transitions[i]));
      }
    }
    stats.steps += ep.length;
    ++stats.episodes;
    stats.mean_reward += ep.raw_reward;
    stats.mean_collisions += ep.collisions;
    if (ep.pursuit_success) ++successes;
    ep.transitions.clear();
    stats.episode_summaries.push_back(std::move(ep));
    if (steps == 0) break;
  }
  if (stats.episodes > 0) {
    stats.mean_reward /= stats.episodes;
    stats.mean_collisions /= stats.episodes;
    stats.success_rate = static_cast<double>(successes) / stats.episodes;
  }
  return stats;
}

ScenarioMode parse_scenario(const std::string& s) {
  if (s == "random") return ScenarioMode::kRandom;
  if (s == "pretrained") return ScenarioMode::kPretrained;
  if (s == "game") return ScenarioMode::kGame;
  throw std::invalid_argument("unknown scenario: " + s);
}

std::string scenario_name(ScenarioMode m) {
  switch (m) {
    case ScenarioMode::kRandom: return "random";
    case ScenarioMode::kPretrained: return "pretrained";
    case ScenarioMode::kGame: return "game";
  }
  return "?";
}

Trainer::Trainer(const env::EnvConfig& env_cfg,
                 const model::ModelConfig& model_cfg, const Hyperparams& hp,
                 uint64_t seed)
    : env_cfg_(env_cfg), model_cfg_(model_cfg), hp_(hp), seed_(seed) {
  if (!hp.valid()) throw std::invalid_argument("Trainer: invalid hyperparams");
  // The capture-radius curriculum opens at a fraction of the arena
  // half-extent (meters) so early random policies see the capture bonus at
  // all, then tightens toward the configured radius as the success gate
  // clears. Team size ramps the same way: the policy network is
  // agent-count-agnostic, so the pursuit law is learned single-handed first
  // and the full team is introduced once the gate clears, which sidesteps
  // the flat-gradient regime a from-scratch multi-agent rollout sits in
  // (every agent's advantage carries the other agents' exploration noise).
  r_pe_train_ = std::max(env_cfg.r_pe, kRadiusStartFraction * env_cfg.l_r * 1000.0);
  m_train_ = 1;
  model::ModelConfig pc = model_cfg;
  pc.obs_dim = env_cfg.pursuer_obs_dim();
  pursuer_ = std::make_unique<Policy>(pc, derive_seed(seed, 2, 0));
  opt_p_ = std::make_unique<nn::RmsProp>(pursuer_->params(), hp.lr);
}

int64_t Trainer::train_team(CollectTeam team, int64_t budget, int64_t step_base,
                            const TrainCallbacks& cb,
                            const TeamControllers& teams, TrainResult* result,
                            bool curriculum) {
  // Rollout rounds cycle the pursuer count through 1..m: the policy is
  // agent-count-agnostic, and the single-agent rounds keep a clean pursuit
  // gradient flowing while the full-team rounds adapt the encoder to
  // teammate-bearing observations. Training at the full count only leaves
  // every agent's advantage swamped by its teammates' exploration noise,
  // and a hard 1 -> m switch puts the encoder out of distribution.
  auto rollout_cfg = [&](int round_idx) {
    env::EnvConfig c = env_cfg_;
    if (curriculum) {
      c.r_pe = r_pe_train_;
      c.m = 1 + static_cast<int>(round_idx % env_cfg_.m);
    }
    return c;
  };
  auto e = std::make_unique<SwarmEnv>(rollout_cfg(0));
  Rng shuffle_rng(derive_seed(seed_, 30 + static_cast<int>(team), 0));
  int64_t steps_done = 0;
  int round = 0;
  Policy& policy = team == CollectTeam::kPursuer ? *pursuer_ : *evader_;
  nn::RmsProp& opt = team == CollectTeam::kPursuer ? *opt_p_ : *opt_e_;
  RewardNormalizer& norm = team == CollectTeam::kPursuer ? norm_ : norm_e_;
  const double a_bound =
      team == CollectTeam::kPursuer ? env_cfg_.a_max_p : env_cfg_.evader_bound();

  while (steps_done < budget) {
    const int quota = static_cast<int>(
        std::min<int64_t>(hp_.rollout_steps, hp_.buffer_capacity));
    RolloutBatch batch;
    CollectStats stats = collect_rollouts(
        *e, teams, team, quota,
        derive_seed(seed_, 50 + static_cast<int>(team), step_base + steps_done),
        attachment_enabled_ || team == CollectTeam::kEvader, &norm, &batch,
        hp_.gamma, hp_.gae_lambda);
    steps_done += stats.steps;

    if (team == CollectTeam::kPursuer && result) {
      for (const auto& ep : stats.episode_summaries) {
        EpisodeRow row;
        row.episode = static_cast<int>(result->episodes.size());
        row.env_steps = start_step + step_base + steps_done;
        row.reward = ep.raw_reward;
        row.collisions = ep.collisions;
        row.pursuit_success = ep.pursuit_success;
        row.attach_success = ep.attach_success;
        row.attachment_enabled = attachment_enabled_;
        result->episodes.push_back(row);
        if (curriculum && !attachment_enabled_) {
          recent_success_.push_back(ep.pursuit_success ? 1 : 0);
          while (static_cast<int>(recent_success_.size()) > hp_.curriculum_window) {
            recent_success_.pop_front();
          }
          if (static_cast<int>(recent_success_.size()) >= hp_.curriculum_window) {
            const double rate =
                std::accumulate(recent_success_.begin(), recent_success_.end(), 0.0) /
                recent_success_.size();
            if (rate >= hp_.curriculum_threshold) {
              if (r_pe_train_ > env_cfg_.r_pe) {
                // Capture-radius curriculum: tighten the training radius
                // toward the configured one each time the gate clears.
                r_pe_train_ = std::max(env_cfg_.r_pe, kRadiusShrink * r_pe_train_);
                recent_success_.clear();
                e = std::make_unique<SwarmEnv>(rollout_cfg());
              } else if (m_train_ < env_cfg_.m) {
                // Team-size curriculum: grow the pursuer team once the
                // single-agent pursuit law is in place.
                ++m_train_;
                recent_success_.clear();
                e = std::make_unique<SwarmEnv>(rollout_cfg());
              } else {
                attachment_enabled_ = true;
                result->curriculum_switch_step = start_step + step_base + steps_done;
              }
            }
          }
        }
      }
    }

    UpdateMetrics m = update(batch, policy, opt, hp_, a_bound, shuffle_rng);
    if (result) ++result->updates;
    ++round;
    if (cb.on_update) {
      cb.on_update(round, start_step + step_base + steps_done, m, stats);
    }
    if (cb.on_checkpoint && cb.checkpoint_interval > 0 &&
        round % cb.checkpoint_interval == 0 && team == CollectTeam::kPursuer) {
      cb.on_checkpoint(start_step + step_base + steps_done, policy, norm);
    }
  }
  return steps_done;
}

TrainResult Trainer::run(ScenarioMode mode, int64_t total_steps,
                         const TrainCallbacks& cb) {
  TrainResult result;
  auto make_evader = [&]() {
    if (evader_) return;
    model::ModelConfig ec = model_cfg_;
    ec.obs_dim = env_cfg_.evader_obs_dim();
    ec.m_max = std::max(env_cfg_.k_max, 1);
    evader_ = std::make_unique<Policy>(ec, derive_seed(seed_, 3, 0));
    opt_e_ = std::make_unique<nn::RmsProp>(evader_->params(), hp_.lr);
  };

  if (mode == ScenarioMode::kRandom) {
    TeamControllers teams;
    teams.pursuer = pursuer_.get();
    result.env_steps =
        train_team(CollectTeam::kPursuer, total_steps, 0, cb, teams, &result, true);
  } else if (mode == ScenarioMode::kPretrained) {
    make_evader();
    // Stage 1: evader learns to avoid scripted PD pursuers.
    TeamControllers ev_stage;
    ev_stage.evader = evader_.get();
    const int64_t ev_budget = total_steps / 4;
    int64_t done =
        train_team(CollectTeam::kEvader, ev_budget, 0, cb, ev_stage, &result, false);
    // Stage 2: pursuers learn against the frozen evader.
    TeamControllers p_stage;
    p_stage.pursuer = pursuer_.get();
    p_stage.evader = evader_.get();
    done += train_team(CollectTeam::kPursuer, total_steps - done, done, cb,
                       p_stage, &result, true);
    result.env_steps = done;
  } else {
    make_evader();
    TeamControllers both;
    both.pursuer = pursuer_.get();
    both.evader = evader_.get();
    int64_t done = 0;
    const int64_t slice =
        std::max<int64_t>(1, static_cast<int64_t>(hp_.n_alt) * hp_.rollout_steps);
    bool pursuer_turn = true;
    while (done < total_steps) {
      const int64_t budget = std::min<int64_t>(slice, total_steps - done);
      done += train_team(pursuer_turn ? CollectTeam::kPursuer : CollectTeam::kEvader,
                         budget, done, cb, both, &result, pursuer_turn);
      pursuer_turn = !pursuer_turn;
    }
    result.env_steps = done;
  }
  return result;
}

}  // namespace swarm::learner
