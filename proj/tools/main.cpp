// swarm: train / evaluate / simulate / verify entry points.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "swarm/checkpoint.hpp"
#include "swarm/config.hpp"
#include "swarm/env.hpp"
#include "swarm/eval.hpp"
#include "swarm/learner.hpp"
#include "swarm/metrics.hpp"
#include "swarm/model.hpp"
#include "swarm/orbit.hpp"

namespace fs = std::filesystem;
using namespace swarm;

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string checkpoint_path;
};

// Output directory: the config's output_dir, resolved under
// SWARM_OUTPUT_ROOT when that is set.
fs::path output_root(const config::RunConfig& cfg) {
  if (const char* env = std::getenv("SWARM_OUTPUT_ROOT"))
    return fs::path(env) / cfg.output_dir;
  return fs::path(cfg.output_dir);
}

config::RunConfig load_config_or_die(const CommonArgs& args) {
  config::RunConfig cfg = config::load_file(args.config_path);
  if (args.seed) cfg.seed = *args.seed;
  std::string why;
  if (!cfg.valid(&why)) {
    throw CLI::ValidationError("config", args.config_path + ": " + why);
  }
  return cfg;
}

model::ModelConfig pursuer_model_config(const config::RunConfig& cfg) {
  model::ModelConfig mc = cfg.model;
  mc.m_max = cfg.env.m_max;
  mc.k_max = cfg.env.k_max;
  mc.obs_dim = cfg.env.pursuer_obs_dim();
  return mc;
}

model::Policy load_policy(const config::RunConfig& cfg,
                          const std::string& ckpt_path,
                          nn::RunningStat* stat = nullptr) {
  if (!fs::exists(ckpt_path)) {
    throw std::runtime_error("checkpoint not found: " + ckpt_path);
  }
  model::Policy policy(pursuer_model_config(cfg), derive_seed(cfg.seed, 2, 0));
  checkpoint::Checkpoint ck = checkpoint::load(ckpt_path);
  checkpoint::restore(ck, policy);
  if (stat) *stat = ck.reward_stat;
  return policy;
}

int cmd_train(const CommonArgs& args, bool resume) {
  config::RunConfig cfg = load_config_or_die(args);
  const fs::path root = output_root(cfg);
  fs::create_directories(root);
  const uint64_t hash = config::config_hash(cfg);

  learner::Trainer trainer(cfg.env, pursuer_model_config(cfg), cfg.train,
                           cfg.seed);
  int64_t budget = cfg.total_steps;
  if (resume) {
    const fs::path latest = root / "checkpoint_latest.bin";
    if (fs::exists(latest)) {
      checkpoint::Checkpoint ck = checkpoint::load(latest.string());
      checkpoint::restore(ck, trainer.pursuer_policy());
      trainer.reward_norm().stat() = ck.reward_stat;
      trainer.start_step = ck.step;
      budget = std::max<int64_t>(0, cfg.total_steps - ck.step);
      std::cout << "resuming from step " << ck.step << "\n";
    }
  }

  metrics::CsvWriter train_log =
      metrics::train_writer((root / "train_metrics.csv").string(), hash);
  metrics::CsvWriter ep_log =
      metrics::episode_writer((root / "train_episodes.csv").string(), hash);
  int64_t episodes_written = 0;

  learner::TrainCallbacks cb;
  cb.checkpoint_interval = cfg.checkpoint_interval;
  cb.on_update = [&](int update, int64_t steps,
                     const learner::UpdateMetrics& m,
                     const learner::CollectStats& stats) {
    metrics::TrainRow row;
    row.update = update;
    row.env_steps = steps;
    row.loss_encoder = m.loss.encoder;
    row.loss_decoder = m.loss.decoder;
    row.loss_reg = m.loss.reg;
    row.loss_total = m.loss.combined;
    row.grad_norm = m.grad_norm;
    row.mean_reward = stats.mean_reward;
    row.success_rate = stats.success_rate;
    row.mean_collisions = stats.mean_collisions;
    metrics::write_row(train_log, row);
    train_log.flush();
    for (const auto& ep : stats.episode_summaries) {
      metrics::EpisodeRowOut er;
      er.episode = episodes_written++;
      er.pursuit_success = ep.pursuit_success;
      er.attach_success = ep.attach_success;
      er.capture_step = ep.capture_step;
      er.length = ep.length;
      er.collisions = ep.collisions;
      er.dv_total = ep.dv_pursuers;
      er.reward = ep.raw_reward;
      metrics::write_row(ep_log, er);
    }
    ep_log.flush();
    std::cout << "update " << update << " steps " << steps << " reward "
              << stats.mean_reward << " success " << stats.success_rate
              << "\n";
  };
  cb.on_checkpoint = [&](int64_t steps, const model::Policy& policy,
                         const learner::RewardNormalizer& norm) {
    checkpoint::Checkpoint ck = checkpoint::snapshot(policy, steps, norm.stat());
    checkpoint::save(ck, (root / "checkpoint_latest.bin").string());
  };

  // Budget 0 still leaves a valid initial checkpoint behind.
  cb.on_checkpoint(trainer.start_step, trainer.pursuer_policy(),
                   trainer.reward_norm());
  learner::TrainResult res =
      trainer.run(learner::parse_scenario(cfg.scenario), budget, cb);
  cb.on_checkpoint(trainer.start_step + res.env_steps, trainer.pursuer_policy(),
                   trainer.reward_norm());
  std::cout << "trained " << res.env_steps << " env steps, " << res.updates
            << " updates\n";
  return 0;
}

int cmd_evaluate(const CommonArgs& args, int runs) {
  config::RunConfig cfg = load_config_or_die(args);
  const fs::path root = output_root(cfg);
  fs::create_directories(root);
  const uint64_t hash = config::config_hash(cfg);

  model::Policy policy = load_policy(cfg, args.checkpoint_path);
  learner::TeamControllers teams;
  teams.pursuer = &policy;
  teams.stochastic = false;

  eval::EvalSummary sum =
      eval::monte_carlo(cfg.env, teams, runs, derive_seed(cfg.seed, 100, 0));
  eval::FuelReport fuel = eval::fuel_accounting(sum.episodes, cfg.env.m);

  metrics::CsvWriter stats_log =
      metrics::eval_writer((root / "eval_stats.csv").string(), hash);
  metrics::EvalStatsRow row;
  row.episodes = sum.pursuit.episodes;
  row.pursuit_rate = sum.pursuit.rate();
  row.pursuit_lo = sum.pursuit.wilson_lo();
  row.pursuit_hi = sum.pursuit.wilson_hi();
  row.attach_rate = sum.attach.rate();
  row.attach_lo = sum.attach.wilson_lo();
  row.attach_hi = sum.attach.wilson_hi();
  row.mean_collisions = sum.mean_collisions;
  row.mean_length = sum.mean_length;
  row.mean_dv = sum.mean_dv;
  row.incomplete_fraction = sum.incomplete_fraction;
  metrics::write_row(stats_log, row);

  metrics::CsvWriter ep_log =
      metrics::episode_writer((root / "eval_episodes.csv").string(), hash);
  for (size_t i = 0; i < sum.episodes.size(); ++i) {
    const auto& ep = sum.episodes[i];
    metrics::EpisodeRowOut er;
    er.episode = int64_t(i);
    er.pursuit_success = ep.pursuit_success;
    er.attach_success = ep.attach_success;
    er.capture_step = ep.capture_step;
    er.length = ep.length;
    er.collisions = ep.collisions;
    er.dv_total = ep.dv_pursuers;
    er.reward = ep.raw_reward;
    metrics::write_row(ep_log, er);
  }

  std::cout << "episodes " << runs << " pursuit " << row.pursuit_rate
            << " attach " << row.attach_rate << " mean_dv " << row.mean_dv
            << " (per agent " << fuel.mean_per_agent << ")\n";
  return 0;
}

int cmd_simulate(const CommonArgs& args, int episodes,
                 const std::string& policy_kind) {
  config::RunConfig cfg = load_config_or_die(args);
  const fs::path root = output_root(cfg);
  fs::create_directories(root);
  const uint64_t hash = config::config_hash(cfg);

  std::optional<model::Policy> policy;
  if (policy_kind == "checkpoint") {
    policy.emplace(load_policy(cfg, args.checkpoint_path));
  } else if (policy_kind != "random" && policy_kind != "pd") {
    throw CLI::ValidationError("--policy",
                               "expected checkpoint, pd, or random");
  }

  metrics::CsvWriter traj =
      metrics::trajectory_writer((root / "trajectories.csv").string(), hash);

  for (int ep = 0; ep < episodes; ++ep) {
    env::SwarmEnv e(cfg.env);
    const uint64_t ep_seed = derive_seed(cfg.seed, 200, ep);
    e.reset(ep_seed);
    Rng rng(derive_seed(ep_seed, 201, 0));
    learner::WindowBuffer window(policy ? policy->config().window : 1,
                                 cfg.env.m, cfg.env.pursuer_obs_dim());
    window.reset(e.pursuer_observation());

    auto log_states = [&](double reward, const env::EventSet& ev) {
      for (int i = 0; i < cfg.env.m + cfg.env.k; ++i) {
        const bool pursuer = i < cfg.env.m;
        const auto& s = pursuer ? e.pursuers()[i] : e.evaders()[i - cfg.env.m];
        const auto& a = pursuer ? e.last_pursuer_accels()[i]
                                : e.last_evader_accels()[i - cfg.env.m];
        metrics::TrajectoryRow row;
        row.episode = ep;
        row.t = e.time_step();
        row.agent = (pursuer ? "p" : "e") +
                    std::to_string(pursuer ? i : i - cfg.env.m);
        for (int c = 0; c < 6; ++c) row.state[c] = s.v[c];
        for (int c = 0; c < 3; ++c) row.accel[c] = a[c];
        row.reward = reward;
        row.phase = int(e.phase());
        row.collisions = ev.collisions;
        row.capture = ev.capture ? 1 : 0;
        metrics::write_row(traj, row);
      }
    };

    while (!e.done()) {
      env::Mat actions = env::Mat::Zero(cfg.env.m, 3);
      if (policy) {
        ad::Tape tape;
        nn::TapeBinding bind(tape, policy->params());
        auto w = window.current();
        auto enc = policy->encode(tape, bind, w);
        auto mix = policy->mixture(
            tape, bind, enc.reps, e.phase() == env::Phase::kAttachment ? 1 : 0);
        env::Mat pre = env::Mat::Zero(cfg.env.m, 3);
        for (int i = 0; i < cfg.env.m; ++i) {
          auto s = policy->decode_act(tape, bind, enc.reps, mix.h, pre, i,
                                      nullptr, cfg.env.a_max_p);
          pre.row(i) = s.pre_squash.transpose();
          actions.row(i) = s.action.transpose();
        }
      } else if (policy_kind == "pd") {
        for (int i = 0; i < cfg.env.m; ++i) {
          actions.row(i) = env::pd_pursuer(e.pursuers()[i], e.evaders()[0],
                                           cfg.env.a_max_p, cfg.env.dt)
                               .a.transpose();
        }
      } else {
        for (int i = 0; i < cfg.env.m; ++i) {
          env::Vec3 dir(rng.gaussian(), rng.gaussian(), rng.gaussian());
          if (dir.norm() < 1e-12) dir = env::Vec3(1, 0, 0);
          dir.normalize();
          actions.row(i) =
              (cfg.env.a_max_p * std::cbrt(rng.uniform()) * dir).transpose();
        }
      }
      auto res = e.step(actions);
      window.push(res.obs);
      log_states(res.reward, res.events);
    }
  }
  std::cout << "wrote trajectories for " << episodes << " episode(s)\n";
  return 0;
}

int cmd_verify() {
  bool ok = true;
  auto report = [&](const std::string& name, bool pass, double detail) {
    std::cout << (pass ? "ok   " : "FAIL ") << name << " (" << detail << ")\n";
    ok = ok && pass;
  };

  // Dynamics: closed-form propagation against the RK4 oracle.
  {
    orbit::OrbitParams orb = orbit::OrbitParams::geo();
    Rng rng(12345);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      orbit::LvlhState s;
      for (int i = 0; i < 6; ++i) {
        s.v[i] = rng.gaussian() * ((i % 2 == 0) ? 10.0 : 0.01);
      }
      orbit::ControlAccel a;
      a.a = 1e-4 * env::Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian());
      orbit::LvlhState exact = orbit::propagate(s, a, 1.0, orb);
      orbit::LvlhState num = orbit::integrate_oracle(s, a, 1.0, orb, 10);
      worst = std::max(worst, (exact.v - num.v).cwiseAbs().maxCoeff());
    }
    report("dynamics closed-form vs rk4", worst < 1e-8, worst);
  }

  // Advantage decomposition on random toy games.
  {
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
      worst = std::max(worst, eval::verify_decomposition(2, 3, 1000 + t));
    }
    for (int t = 0; t < 20; ++t) {
      worst = std::max(worst, eval::verify_decomposition(3, 3, 2000 + t));
    }
    report("advantage decomposition", worst <= 1e-12, worst);
  }

  // Gradient check on a tiny model: autodiff vs central finite differences.
  {
    model::ModelConfig mc;
    mc.d_model = 8;
    mc.n_heads = 2;
    mc.n_blocks_enc = 1;
    mc.n_blocks_dec = 1;
    mc.window = 2;
    mc.m_max = 3;
    mc.k_max = 1;
    mc.obs_dim = env::EnvConfig::obs_dim_for(3, 1);
    model::Policy policy(mc, 99);

    Rng rng(4242);
    learner::Transition tr;
    tr.n = 2;
    tr.task = 0;
    tr.window = env::Mat::Zero(mc.window * tr.n, mc.obs_dim);
    for (int r = 0; r < tr.window.rows(); ++r) {
      for (int c = 0; c < tr.window.cols(); ++c) {
        tr.window(r, c) = 0.3 * rng.gaussian();
      }
    }
    tr.next_window = tr.window;
    tr.pre_squash = env::Mat::Zero(tr.n, 3);
    for (int r = 0; r < tr.n; ++r) {
      for (int c = 0; c < 3; ++c) tr.pre_squash(r, c) = 0.5 * rng.gaussian();
    }
    tr.old_logprobs = Eigen::VectorXd::Constant(tr.n, -3.0);
    tr.advantage = 0.7;
    Eigen::VectorXd target = Eigen::VectorXd::Constant(tr.n, 0.25);
    learner::Hyperparams hp;

    auto loss_at = [&]() {
      ad::Tape tape;
      nn::TapeBinding bind(tape, policy.params());
      return learner::combined_loss(tape, bind, policy, tr, target, 1e-3, hp)
          .parts.combined;
    };

    ad::Tape tape;
    nn::TapeBinding bind(tape, policy.params());
    auto lv = learner::combined_loss(tape, bind, policy, tr, target, 1e-3, hp);
    tape.backward(lv.total);
    nn::GradStore grads(policy.params());
    bind.accumulate(grads);

    Rng pick(777);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
      const int pi = int(pick.below(uint64_t(policy.params().count())));
      env::Mat& mat = policy.params().value(pi);
      const int r = int(pick.below(uint64_t(mat.rows())));
      const int c = int(pick.below(uint64_t(mat.cols())));
      const double h = 1e-5;
      const double saved = mat(r, c);
      mat(r, c) = saved + h;
      const double up = loss_at();
      mat(r, c) = saved - h;
      const double dn = loss_at();
      mat(r, c) = saved;
      const double fd = (up - dn) / (2.0 * h);
      const double ad_g = grads.grad(pi)(r, c);
      const double rel =
          std::abs(fd - ad_g) / std::max({std::abs(fd), std::abs(ad_g), 1e-6});
      worst = std::max(worst, rel);
    }
    report("gradient vs finite differences", worst < 1e-4, worst);
  }

  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"satellite swarm pursuit-attachment toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  bool resume = false;
  int runs = 500;
  int episodes = 1;
  std::string policy_kind = "checkpoint";
  uint64_t seed_opt = 0;

  auto add_common = [&](CLI::App* sub, bool needs_ckpt) {
    sub->add_option("config", args.config_path, "run config file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed_opt, "override the config seed")
        ->each([&](const std::string&) { args.seed = seed_opt; });
    if (needs_ckpt) {
      sub->add_option("--checkpoint", args.checkpoint_path, "checkpoint path");
    }
  };

  CLI::App* train = app.add_subcommand("train", "train policies");
  add_common(train, false);
  train->add_flag("--resume", resume, "resume from the latest checkpoint");

  CLI::App* evaluate = app.add_subcommand("evaluate", "Monte Carlo evaluation");
  add_common(evaluate, true);
  evaluate->add_option("--runs", runs, "evaluation episodes");

  CLI::App* simulate = app.add_subcommand("simulate", "write trajectory rows");
  add_common(simulate, true);
  simulate->add_option("--episodes", episodes, "episodes to roll");
  simulate->add_option("--policy", policy_kind,
                       "checkpoint | pd | random pursuer controller");

  CLI::App* verify = app.add_subcommand("verify", "run the oracle suites");
  (void)verify;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train->parsed()) return cmd_train(args, resume);
    if (evaluate->parsed()) return cmd_evaluate(args, runs);
    if (simulate->parsed()) return cmd_simulate(args, episodes, policy_kind);
    return cmd_verify();
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    // Configuration problems are usage errors; everything else is runtime.
    return std::string(e.what()).rfind("config", 0) == 0 ? 1 : 2;
  }
}
