#include "swarm/eval.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace swarm::eval {

using env::EnvConfig;
using env::SwarmEnv;
using learner::EpisodeResult;
using learner::TeamControllers;

double SuccessStats::wilson_lo(double z) const {
  if (episodes == 0) return 0.0;
  const double n = episodes, p = rate(), z2 = z * z;
  const double center = p + z2 / (2.0 * n);
  const double spread = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return std::max(0.0, (center - spread) / (1.0 + z2 / n));
}

double SuccessStats::wilson_hi(double z) const {
  if (episodes == 0) return 1.0;
  const double n = episodes, p = rate(), z2 = z * z;
  const double center = p + z2 / (2.0 * n);
  const double spread = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return std::min(1.0, (center + spread) / (1.0 + z2 / n));
}

namespace {

EvalSummary summarize(std::vector<EpisodeResult> eps) {
  EvalSummary out;
  for (const auto& ep : eps) {
    out.pursuit.episodes += 1;
    out.attach.episodes += 1;
    if (ep.pursuit_success) out.pursuit.successes += 1;
    if (ep.attach_success) out.attach.successes += 1;
    out.mean_collisions += ep.collisions;
    out.mean_length += ep.length;
    out.mean_dv += ep.dv_pursuers;
    out.max_dv = std::max(out.max_dv, ep.dv_pursuers);
  }
  if (!eps.empty()) {
    out.mean_collisions /= eps.size();
    out.mean_length /= eps.size();
    out.mean_dv /= eps.size();
  }
  out.incomplete_fraction = incomplete_fraction(eps);
  out.episodes = std::move(eps);
  return out;
}

}  // namespace

EvalSummary monte_carlo(const EnvConfig& cfg, const TeamControllers& teams,
                        int episodes, uint64_t seed, bool parallel) {
  std::vector<EpisodeResult> eps(episodes);
  const int n_threads = parallel ? omp_get_max_threads() : 1;
#pragma omp parallel for schedule(dynamic) num_threads(n_threads)
  for (int i = 0; i < episodes; ++i) {
    SwarmEnv e(cfg);
    eps[i] = learner::run_episode(e, teams, derive_seed(seed, 11, i),
                                  learner::CollectTeam::kNone,
                                  /*attachment_enabled=*/true, nullptr);
  }
  return summarize(std::move(eps));
}

EvalSummary random_baseline(const EnvConfig& cfg, int episodes, uint64_t seed,
                            bool parallel) {
  std::vector<EpisodeResult> eps(episodes);
  const int n_threads = parallel ? omp_get_max_threads() : 1;
#pragma omp parallel for schedule(dynamic) num_threads(n_threads)
  for (int i = 0; i < episodes; ++i) {
    SwarmEnv e(cfg);
    const uint64_t ep_seed = derive_seed(seed, 12, i);
    e.reset(ep_seed);
    Rng rng(derive_seed(ep_seed, 13, 0));
    EpisodeResult r;
    r.dv_each.assign(cfg.m, 0.0);
    while (!e.done()) {
      env::Mat actions(cfg.m, 3);
      for (int a = 0; a < cfg.m; ++a) {
        // Uniform in the bound ball: random direction, cube-root radius.
        env::Vec3 dir(rng.gaussian(), rng.gaussian(), rng.gaussian());
        if (dir.norm() < 1e-12) dir = env::Vec3(1, 0, 0);
        dir.normalize();
        const double radius = cfg.a_max_p * std::cbrt(rng.uniform());
        actions.row(a) = (radius * dir).transpose();
      }
      auto res = e.step(actions);
      ++r.length;
      r.collisions += res.events.collisions;
      r.dv_pursuers += res.dv_step;
      r.raw_reward += res.reward;
      if (res.events.capture) r.capture_step = r.length;
    }
    r.pursuit_success = r.capture_step >= 0;
    r.attach_success = e.phase() == env::Phase::kDoneSuccess;
    eps[i] = std::move(r);
  }
  return summarize(std::move(eps));
}

FuelReport fuel_accounting(const std::vector<EpisodeResult>& eps,
                           int n_agents) {
  FuelReport rep;
  if (eps.empty() || n_agents <= 0) return rep;
  for (const auto& ep : eps) {
    rep.mean_total += ep.dv_pursuers;
    rep.max_total = std::max(rep.max_total, ep.dv_pursuers);
  }
  rep.mean_total /= eps.size();
  rep.mean_per_agent = rep.mean_total / n_agents;
  return rep;
}

std::vector<double> collision_curve(const std::vector<double>& per_episode,
                                    int window) {
  if (window < 1) throw std::invalid_argument("collision_curve: window < 1");
  std::vector<double> out;
  for (size_t start = 0; start < per_episode.size(); start += window) {
    const size_t end = std::min(per_episode.size(), start + window);
    double s = 0.0;
    for (size_t i = start; i < end; ++i) s += per_episode[i];
    out.push_back(s / (end - start));
  }
  return out;
}

double incomplete_fraction(const std::vector<EpisodeResult>& eps) {
  if (eps.empty()) return 0.0;
  int incomplete = 0;
  for (const auto& ep : eps) {
    if (!ep.pursuit_success && !ep.attach_success) ++incomplete;
  }
  return double(incomplete) / eps.size();
}

ZTest two_proportion_z(int success_a, int n_a, int success_b, int n_b) {
  ZTest t;
  if (n_a == 0 || n_b == 0) return t;
  const double pa = double(success_a) / n_a;
  const double pb = double(success_b) / n_b;
  const double pooled = double(success_a + success_b) / (n_a + n_b);
  const double se =
      std::sqrt(pooled * (1.0 - pooled) * (1.0 / n_a + 1.0 / n_b));
  if (se < 1e-300) {
    t.z = pa > pb ? 1e9 : 0.0;
    t.p_value = pa > pb ? 0.0 : 1.0;
    return t;
  }
  t.z = (pa - pb) / se;
  t.p_value = 0.5 * std::erfc(t.z / std::sqrt(2.0));  // one-sided, a > b
  return t;
}

std::vector<SweepRow> scalability_sweep(const EnvConfig& base_cfg,
                                        const model::Policy& policy,
                                        const std::vector<int>& team_sizes,
                                        int episodes, uint64_t seed) {
  std::vector<SweepRow> rows;
  for (size_t i = 0; i < team_sizes.size(); ++i) {
    const int m = team_sizes[i];
    if (m < 1 || m > base_cfg.m_max) {
      throw std::invalid_argument("scalability_sweep: team size outside layout");
    }
    EnvConfig cfg = base_cfg;
    cfg.m = m;
    TeamControllers teams;
    teams.pursuer = &policy;
    teams.stochastic = false;
    const uint64_t s = derive_seed(seed, 20, i);
    EvalSummary pol = monte_carlo(cfg, teams, episodes, s);
    EvalSummary base = random_baseline(cfg, episodes, derive_seed(s, 21, 0));
    SweepRow row;
    row.m = m;
    row.policy = pol.pursuit;
    row.baseline = base.pursuit;
    row.test = two_proportion_z(pol.pursuit.successes, pol.pursuit.episodes,
                                base.pursuit.successes, base.pursuit.episodes);
    rows.push_back(row);
  }
  return rows;
}

double verify_decomposition(int n_agents, int n_actions, uint64_t seed) {
  if (n_agents < 1 || n_actions < 1) {
    throw std::invalid_argument("verify_decomposition: bad game shape");
  }
  Rng rng(seed);

  int joint = 1;
  for (int i = 0; i < n_agents; ++i) joint *= n_actions;

  std::vector<double> q(joint);
  for (auto& v : q) v = rng.gaussian();

  // Random product policy, rows normalized.
  std::vector<std::vector<double>> pi(n_agents, std::vector<double>(n_actions));
  for (auto& row : pi) {
    double s = 0.0;
    for (auto& p : row) {
      p = rng.uniform() + 1e-3;
      s += p;
    }
    for (auto& p : row) p /= s;
  }

  // Q of a fixed prefix a^{1:j}: expectation over the remaining agents.
  auto partial_q = [&](const std::vector<int>& prefix) {
    const int fixed = static_cast<int>(prefix.size());
    double total = 0.0;
    int tail = 1;
    for (int i = fixed; i < n_agents; ++i) tail *= n_actions;
    for (int t = 0; t < tail; ++t) {
      int code = 0, rem = t;
      double w = 1.0;
      for (int i = 0; i < fixed; ++i) code = code * n_actions + prefix[i];
      for (int i = fixed; i < n_agents; ++i) {
        int div = 1;
        for (int j = i + 1; j < n_agents; ++j) div *= n_actions;
        const int a = rem / div;
        rem %= div;
        code = code * n_actions + a;
        w *= pi[i][a];
      }
      total += w * q[code];
    }
    return total;
  };

  const double v0 = partial_q({});
  double worst = 0.0;
  for (int t = 0; t < joint; ++t) {
    std::vector<int> a(n_agents);
    int rem = t;
    for (int i = n_agents - 1; i >= 0; --i) {
      a[i] = rem % n_actions;
      rem /= n_actions;
    }
    const double joint_adv = partial_q(a) - v0;
    double sum_adv = 0.0;
    double prev = v0;
    std::vector<int> prefix;
    for (int i = 0; i < n_agents; ++i) {
      prefix.push_back(a[i]);
      const double cur = partial_q(prefix);
      sum_adv += cur - prev;
      prev = cur;
    }
    worst = std::max(worst, std::abs(joint_adv - sum_adv));
  }
  return worst;
}

}  // namespace swarm::eval
