#ifndef SWARM_QUEUE_HPP_
#define SWARM_QUEUE_HPP_

#include <vector>

namespace swarm::queue {

// Per-satellite, per-target computational backlog (abstract work units).
struct QueueState {
  int m = 0;   // satellites
  int kk = 0;  // targets
  std::vector<double> q;  // m*kk, row-major [i][k]

  QueueState() = default;
  QueueState(int m_, int kk_) : m(m_), kk(kk_), q(m_ * kk_, 0.0) {}
  double& at(int i, int k) { return q[i * kk + k]; }
  double at(int i, int k) const { return q[i * kk + k]; }
  double total() const;
  double total_for(int i) const;
};

// Binary offload indicators and offloaded amounts.
struct OffloadDecision {
  int m = 0;
  int kk = 0;
  std::vector<int> a;     // m*m, a[i][j] in {0,1}, a[i][i]=0
  std::vector<double> y;  // m*m*kk, y[i][j][k] >= 0, zero when a[i][j]=0

  OffloadDecision() = default;
  OffloadDecision(int m_, int kk_)
      : m(m_), kk(kk_), a(m_ * m_, 0), y(m_ * m_ * kk_, 0.0) {}
  int& link(int i, int j) { return a[i * m + j]; }
  int link(int i, int j) const { return a[i * m + j]; }
  double& amount(int i, int j, int k) { return y[(i * m + j) * kk + k]; }
  double amount(int i, int j, int k) const { return y[(i * m + j) * kk + k]; }
};

// Newly sensed work per satellite and target.
struct SensedLoad {
  int m = 0;
  int kk = 0;
  std::vector<double> s;  // m*kk

  SensedLoad() = default;
  SensedLoad(int m_, int kk_) : m(m_), kk(kk_), s(m_ * kk_, 0.0) {}
  double& at(int i, int k) { return s[i * kk + k]; }
  double at(int i, int k) const { return s[i * kk + k]; }
};

struct QueueParams {
  double c_local = 1.0;   // local compute drained per step, before the clamp
  double s0 = 1.0;        // sensed work per in-range target
  double rho_sense = 100.0;  // sensing range, km
  double lambda = 0.01;   // outage penalty coefficient
};

// One backlog update: each sender sheds offloaded work and local compute
// (clamped at zero), receivers gain the offloaded work the same step, then
// sensing adds new load.
QueueState update_queue(const QueueState& q, const OffloadDecision& d,
                        const SensedLoad& s, double c_local = 0.0);

// -lambda * total backlog; added to the per-step team reward.
double backlog_penalty(const QueueState& q, double lambda);

// Greedy offloading: each satellite offloads half of its per-target backlog
// to the least-loaded neighbor whose total backlog is below its own.
OffloadDecision greedy_offload(const QueueState& q);

}  // namespace swarm::queue

#endif  // SWARM_QUEUE_HPP_
