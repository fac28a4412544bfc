#include "swarm/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace swarm::env {

namespace {
constexpr double kMeters = 1e-3;  // m -> km
}

bool EnvConfig::valid() const {
  return m >= 1 && k >= 1 && m <= m_max && k <= k_max && l_r > 0.0 &&
         r_p > 0.0 && r_e > 0.0 && r_pe > 0.0 && varpi_min > 0.0 &&
         v_max > 0.0 && v_dock > 0.0 && T0 >= 1 && dt > 0.0 && a_max_p > 0.0 &&
         evader_gain > 0.0 && orbit.valid();
}

ControlAccel scripted_evader(EvaderKind kind, double p_imp, double bound,
                             Rng& rng, const LvlhState& self, double l_r) {
  if (kind != EvaderKind::kRandomImpulse) {
    throw std::invalid_argument("scripted_evader: unknown kind");
  }
  ControlAccel a;
  // Draw the direction unconditionally so the stream advances identically
  // regardless of whether the impulse fires.
  Vec3 dir(rng.gaussian(), rng.gaussian(), rng.gaussian());
  const double fire = rng.uniform();
  // Boundary avoidance: if a short coast would put the evader near the
  // edge, burn toward the center (it loses the game past the boundary).
  const Vec3 ahead = self.position() + 30.0 * self.velocity();
  if (ahead.cwiseAbs().maxCoeff() > 0.8 * l_r) {
    Vec3 back = -ahead;
    if (back.norm() > 0.0) a.a = bound * back.normalized();
    return a;
  }
  if (fire < p_imp && dir.norm() > 0.0) {
    a.a = bound * dir.normalized();
  }
  return a;
}

ControlAccel pd_pursuer(const LvlhState& self, const LvlhState& target,
                        double a_max, double dt) {
  const Vec3 dp = target.position() - self.position();
  const Vec3 dv = target.velocity() - self.velocity();
  const double dist = dp.norm();
  // Velocity-profile chase: close at the braking-limited speed
  // sqrt(2 a d) (with margin), then damp out the residual rate. Near
  // time-optimal for a double integrator, unlike plain critically damped
  // gains which take ~3x the minimum time.
  ControlAccel a;
  if (dist < 1e-12) {
    a.a = dv / dt;
  } else {
    const Vec3 v_des = std::sqrt(2.0 * 0.6 * a_max * dist) * (dp / dist);
    // Relative rate of self toward the target is -dv.
    a.a = (v_des + dv) / dt;
  }
  const double n = a.a.norm();
  if (n > a_max) a.a *= a_max / n;
  return a;
}

EventSet detect_events(const std::vector<LvlhState>& pursuers,
                       const std::vector<LvlhState>& evaders,
                       const std::vector<int>& assignment,
                       std::vector<bool>& captured, std::vector<bool>& attached,
                       Phase phase, const EnvConfig& cfg) {
  EventSet ev;
  const double capture_radius = cfg.r_pe * kMeters;
  const double contact = (cfg.r_p + cfg.r_e + cfg.varpi_min) * kMeters;
  const double collide = (2.0 * cfg.r_p + cfg.varpi_min) * kMeters;
  const double v_dock = cfg.v_dock * kMeters;

  // Pursuer-pursuer collisions.
  for (size_t i = 0; i < pursuers.size(); ++i) {
    for (size_t j = i + 1; j < pursuers.size(); ++j) {
      if ((pursuers[i].position() - pursuers[j].position()).norm() < collide) {
        ++ev.collisions;
      }
    }
  }
  // Boundary exits.
  for (const auto& p : pursuers) {
    if (p.position().cwiseAbs().maxCoeff() > cfg.l_r) ++ev.boundary_exits;
  }

  // Per-evader capture: all assigned pursuers inside the capture radius
  // (any-one semantics behind the config flag), or the evader pushed out of
  // the arena.
  const bool was_all_captured =
      std::all_of(captured.begin(), captured.end(), [](bool c) { return c; });
  for (size_t e = 0; e < evaders.size(); ++e) {
    if (captured[e]) continue;
    if (evaders[e].position().cwiseAbs().maxCoeff() > cfg.l_r) {
      captured[e] = true;
      ev.evader_out = true;
      continue;
    }
    int assigned = 0, inside = 0;
    for (size_t i = 0; i < pursuers.size(); ++i) {
      if (assignment[i] != static_cast<int>(e)) continue;
      ++assigned;
      if ((pursuers[i].position() - evaders[e].position()).norm() <=
          capture_radius) {
        ++inside;
      }
    }
    if (assigned > 0 &&
        (cfg.require_all ? inside == assigned : inside >= 1)) {
      captured[e] = true;
    }
  }
  const bool all_captured =
      std::all_of(captured.begin(), captured.end(), [](bool c) { return c; });
  if (!was_all_captured && all_captured) ev.capture = true;

  // Attachment: near-contact closure with bounded relative speed, only once
  // the attachment phase is active (or entered this step).
  if (phase == Phase::kAttachment || ev.capture) {
    for (size_t e = 0; e < evaders.size(); ++e) {
      if (attached[e]) continue;
      for (const auto& p : pursuers) {
        const double dist = (p.position() - evaders[e].position()).norm();
        const double relspeed = (p.velocity() - evaders[e].velocity()).norm();
        if (dist <= contact && relspeed <= v_dock) {
          attached[e] = true;
          break;
        }
      }
    }
    if (std::all_of(attached.begin(), attached.end(), [](bool a) { return a; })) {
      ev.attach_success = true;
    }
  }
  return ev;
}

SwarmEnv::SwarmEnv(const EnvConfig& cfg) : cfg_(cfg), queue_(cfg.m, cfg.k) {
  if (!cfg.valid()) throw std::invalid_argument("SwarmEnv: invalid config");
  transition_ = orbit::state_transition(cfg.orbit, cfg.dt);
}

bool SwarmEnv::done() const {
  return phase_ == Phase::kDoneSuccess || phase_ == Phase::kDoneFailure;
}

Vec3 SwarmEnv::clip_norm(const Vec3& v, double bound) const {
  const double n = v.norm();
  return n > bound ? Vec3(v * (bound / n)) : v;
}

Mat SwarmEnv::reset(uint64_t seed) {
  placement_rng_.reseed(derive_seed(seed, 0, 0));
  evader_rng_.clear();
  for (int j = 0; j < cfg_.k; ++j) {
    evader_rng_.emplace_back(derive_seed(seed, 1 + j, 0));
  }
  const int total = cfg_.m + cfg_.k;
  const double min_sep = std::min(10.0 * cfg_.r_pe * kMeters, 0.5 * cfg_.l_r);
  std::vector<Vec3> placed;
  for (int i = 0; i < total; ++i) {
    bool ok = false;
    for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
      Vec3 p(placement_rng_.uniform(-cfg_.l_r, cfg_.l_r),
             placement_rng_.uniform(-cfg_.l_r, cfg_.l_r),
             placement_rng_.uniform(-cfg_.l_r, cfg_.l_r));
      ok = true;
      for (const auto& q : placed) {
        if ((p - q).norm() < min_sep) {
          ok = false;
          break;
        }
      }
      if (ok) placed.push_back(p);
    }
    if (!ok) throw std::runtime_error("reset: cannot place agents with required separation");
  }
  pursuers_.assign(cfg_.m, LvlhState());
  evaders_.assign(cfg_.k, LvlhState());
  for (int i = 0; i < cfg_.m; ++i) pursuers_[i].set_position(placed[i]);
  for (int j = 0; j < cfg_.k; ++j) evaders_[j].set_position(placed[cfg_.m + j]);
  last_acc_p_.assign(cfg_.m, Vec3::Zero());
  last_acc_e_.assign(cfg_.k, Vec3::Zero());
  captured_.assign(cfg_.k, false);
  attached_.assign(cfg_.k, false);
  queue_ = queue::QueueState(cfg_.m, cfg_.k);
  phase_ = Phase::kPursuit;
  t_ = 0;
  return pursuer_observation();
}

std::vector<int> SwarmEnv::assign_targets() const {
  // Nearest unattached evader; all evaders attached never occurs here
  // because the episode ends first.
  std::vector<int> assignment(cfg_.m, 0);
  for (int i = 0; i < cfg_.m; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_j = -1;
    for (int j = 0; j < cfg_.k; ++j) {
      if (attached_[j]) continue;
      const double d = (pursuers_[i].position() - evaders_[j].position()).norm();
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    assignment[i] = best_j >= 0 ? best_j : 0;
  }
  return assignment;
}

StepResult SwarmEnv::step(const Mat& pursuer_actions, const Mat* evader_actions) {
  if (done()) throw std::logic_error("step: environment is done");
  if (pursuer_actions.rows() != cfg_.m || pursuer_actions.cols() != 3) {
    throw std::invalid_argument("step: action shape mismatch");
  }
  const auto assignment = assign_targets();

  std::vector<double> dist_before(cfg_.m);
  for (int i = 0; i < cfg_.m; ++i) {
    dist_before[i] =
        (pursuers_[i].position() - evaders_[assignment[i]].position()).norm();
  }

  // Clip accelerations to per-team bounds.
  double dv = 0.0;
  for (int i = 0; i < cfg_.m; ++i) {
    last_acc_p_[i] = clip_norm(pursuer_actions.row(i).transpose(), cfg_.a_max_p);
    dv += last_acc_p_[i].norm() * cfg_.dt;
  }
  for (int j = 0; j < cfg_.k; ++j) {
    Vec3 a;
    if (evader_actions) {
      if (evader_actions->rows() != cfg_.k || evader_actions->cols() != 3) {
        throw std::invalid_argument("step: evader action shape mismatch");
      }
      a = evader_actions->row(j).transpose();
    } else {
      a = scripted_evader(EvaderKind::kRandomImpulse, cfg_.p_imp,
                          cfg_.evader_bound(), evader_rng_[j], evaders_[j],
                          cfg_.l_r).a;
    }
    last_acc_e_[j] = clip_norm(a, cfg_.evader_bound());
  }

  // Propagate, then rescale any over-cap velocity.
  auto advance = [&](LvlhState& s, const Vec3& a) {
    ControlAccel c;
    c.a = a;
    s = orbit::propagate(s, c, transition_);
    const Vec3 v = s.velocity();
    if (v.norm() > cfg_.v_max) s.set_velocity(v * (cfg_.v_max / v.norm()));
  };
  for (int i = 0; i < cfg_.m; ++i) advance(pursuers_[i], last_acc_p_[i]);
  for (int j = 0; j < cfg_.k; ++j) advance(evaders_[j], last_acc_e_[j]);

  // Backlog update: sensing load within range, greedy offloading, local compute.
  queue::SensedLoad sensed(cfg_.m, cfg_.k);
  const double sense_range = cfg_.queue.rho_sense;
  for (int i = 0; i < cfg_.m; ++i) {
    for (int j = 0; j < cfg_.k; ++j) {
      const double d = (pursuers_[i].position() - evaders_[j].position()).norm();
      if (d <= sense_range) sensed.at(i, j) = cfg_.queue.s0;
    }
  }
  const auto offload = queue::greedy_offload(queue_);
  queue_ = queue::update_queue(queue_, offload, sensed, cfg_.queue.c_local);

  StepResult res;
  res.events = detect_events(pursuers_, evaders_, assignment, captured_,
                             attached_, phase_, cfg_);

  // Reward.
  const RewardWeights& w = cfg_.reward;
  double shaped = 0.0;
  for (int i = 0; i < cfg_.m; ++i) {
    const double after =
        (pursuers_[i].position() - evaders_[assignment[i]].position()).norm();
    shaped += (dist_before[i] - after) / cfg_.l_r;
  }
  res.shaping = w.w_d * shaped;
  double r = res.shaping;
  if (res.events.capture) r += w.w_cap;
  if (res.events.attach_success) r += w.w_att;
  r -= w.w_col * res.events.collisions;
  r -= w.w_bnd * res.events.boundary_exits;
  r -= w.w_fuel * dv;
  r += queue::backlog_penalty(queue_, cfg_.queue.lambda);
  r = std::clamp(r, -w.r_max, w.r_max);

  // Phase logic: monotone Pursuit -> Attachment -> Done.
  if (res.events.capture && phase_ == Phase::kPursuit) phase_ = Phase::kAttachment;
  ++t_;
  if (res.events.attach_success && phase_ == Phase::kAttachment) {
    phase_ = Phase::kDoneSuccess;
  } else if (t_ >= cfg_.T0) {
    // Pursuers straying past the boundary are penalized each step they are
    // outside but the episode keeps running; only the clock ends it.
    phase_ = Phase::kDoneFailure;
  }

  res.reward = r;
  res.per_agent = Eigen::VectorXd::Constant(cfg_.m, r / cfg_.m);
  res.done = done();
  res.phase = phase_;
  res.dv_step = dv;
  res.obs = pursuer_observation();
  return res;
}

namespace {

void write_state(Mat& obs, int row, int offset, const orbit::Vec6& v,
                 double l_r, double v_scale) {
  for (int c = 0; c < 6; ++c) {
    obs(row, offset + c) = (c % 2 == 0) ? v[c] / l_r : v[c] / v_scale;
  }
}

}  // namespace

Mat SwarmEnv::pursuer_observation() const {
  const int dim = cfg_.pursuer_obs_dim();
  Mat obs = Mat::Zero(cfg_.m, dim);
  const double vs = cfg_.v_scale();
  for (int i = 0; i < cfg_.m; ++i) {
    int off = 0;
    write_state(obs, i, off, pursuers_[i].v, cfg_.l_r, vs);
    off += 6;
    for (int j = 0; j < cfg_.m_max - 1; ++j) {
      const int mate = j < i ? j : j + 1;
      if (mate < cfg_.m) {
        write_state(obs, i, off, orbit::Vec6(pursuers_[mate].v - pursuers_[i].v),
                    cfg_.l_r, vs);
      }
      off += 6;
    }
    for (int j = 0; j < cfg_.k_max; ++j) {
      if (j < cfg_.k) {
        write_state(obs, i, off, orbit::Vec6(evaders_[j].v - pursuers_[i].v),
                    cfg_.l_r, vs);
      }
      off += 6;
    }
    obs(i, off++) = queue_.total_for(i) / 10.0;
    obs(i, off++) = phase_ == Phase::kPursuit ? 1.0 : 0.0;
    obs(i, off++) = phase_ == Phase::kAttachment ? 1.0 : 0.0;
    obs(i, off++) = 1.0 - static_cast<double>(t_) / cfg_.T0;
  }
  return obs;
}

Mat SwarmEnv::evader_observation() const {
  const int dim = cfg_.evader_obs_dim();
  Mat obs = Mat::Zero(cfg_.k, dim);
  const double vs = cfg_.v_scale();
  for (int i = 0; i < cfg_.k; ++i) {
    int off = 0;
    write_state(obs, i, off, evaders_[i].v, cfg_.l_r, vs);
    off += 6;
    for (int j = 0; j < cfg_.k_max - 1; ++j) {
      const int mate = j < i ? j : j + 1;
      if (mate < cfg_.k) {
        write_state(obs, i, off, orbit::Vec6(evaders_[mate].v - evaders_[i].v),
                    cfg_.l_r, vs);
      }
      off += 6;
    }
    for (int j = 0; j < cfg_.m_max; ++j) {
      if (j < cfg_.m) {
        write_state(obs, i, off, orbit::Vec6(pursuers_[j].v - evaders_[i].v),
                    cfg_.l_r, vs);
      }
      off += 6;
    }
    obs(i, off++) = 0.0;  // evaders carry no backlog
    obs(i, off++) = phase_ == Phase::kPursuit ? 1.0 : 0.0;
    obs(i, off++) = phase_ == Phase::kAttachment ? 1.0 : 0.0;
    obs(i, off++) = 1.0 - static_cast<double>(t_) / cfg_.T0;
  }
  return obs;
}

}  // namespace swarm::env
