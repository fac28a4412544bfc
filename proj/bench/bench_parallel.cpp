// Compares the serial reference evaluation path against the OpenMP one and
// sanity-checks that both produce identical statistics.

#include <omp.h>

#include <chrono>
#include <cstdio>

#include "swarm/env.hpp"
#include "swarm/eval.hpp"
#include "swarm/learner.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

int main() {
  swarm::env::EnvConfig cfg;
  cfg.l_r = 5.0;
  cfg.T0 = 300;
  const int episodes = 64;

  swarm::learner::TeamControllers teams;  // PD-oracle pursuers
  teams.stochastic = false;

  const auto t_serial = Clock::now();
  auto serial = swarm::eval::monte_carlo(cfg, teams, episodes, 9001, false);
  const double dt_serial = seconds_since(t_serial);

  const auto t_par = Clock::now();
  auto parallel = swarm::eval::monte_carlo(cfg, teams, episodes, 9001, true);
  const double dt_par = seconds_since(t_par);

  const bool same = serial.pursuit.successes == parallel.pursuit.successes &&
                    serial.mean_length == parallel.mean_length &&
                    serial.mean_dv == parallel.mean_dv;

  std::printf("threads          : %d\n", omp_get_max_threads());
  std::printf("episodes         : %d\n", episodes);
  std::printf("serial           : %.3f s (%.1f ep/s)\n", dt_serial,
              episodes / dt_serial);
  std::printf("openmp           : %.3f s (%.1f ep/s)\n", dt_par,
              episodes / dt_par);
  std::printf("speedup          : %.2fx\n", dt_serial / dt_par);
  std::printf("results identical: %s\n", same ? "yes" : "NO");
  return same ? 0 : 1;
}
