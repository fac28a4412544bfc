#include "swarm/queue.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace swarm::queue {

double QueueState::total() const {
  return std::accumulate(q.begin(), q.end(), 0.0);
}

double QueueState::total_for(int i) const {
  double t = 0.0;
  for (int k = 0; k < kk; ++k) t += at(i, k);
  return t;
}

QueueState update_queue(const QueueState& q, const OffloadDecision& d,
                        const SensedLoad& s, double c_local) {
  if (d.m != q.m || d.kk != q.kk || s.m != q.m || s.kk != q.kk) {
    throw std::invalid_argument("update_queue: shape mismatch");
  }
  for (double v : q.q)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("update_queue: negative or non-finite backlog");
  for (double v : s.s)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("update_queue: negative or non-finite load");

  QueueState out(q.m, q.kk);
  // Receiver-side arrivals, accumulated before the sender clamp.
  std::vector<double> arrivals(q.m * q.kk, 0.0);
  for (int i = 0; i < q.m; ++i) {
    for (int j = 0; j < q.m; ++j) {
      if (i == j || d.link(i, j) == 0) continue;
      for (int k = 0; k < q.kk; ++k) {
        arrivals[j * q.kk + k] += d.amount(i, j, k);
      }
    }
  }
  for (int i = 0; i < q.m; ++i) {
    // Remaining local capacity is shared across this satellite's targets.
    double capacity = c_local;
    for (int k = 0; k < q.kk; ++k) {
      double shed = 0.0;
      for (int j = 0; j < q.m; ++j) {
        if (i != j && d.link(i, j)) shed += d.amount(i, j, k);
      }
      double own = q.at(i, k) - shed;
      if (capacity > 0.0 && own > 0.0) {
        const double used = std::min(capacity, own);
        own -= used;
        capacity -= used;
      }
      out.at(i, k) = std::max(own, 0.0) + s.at(i, k) + arrivals[i * q.kk + k];
    }
  }
  return out;
}

double backlog_penalty(const QueueState& q, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("backlog_penalty: lambda >= 0");
  return -lambda * q.total();
}

OffloadDecision greedy_offload(const QueueState& q) {
  OffloadDecision d(q.m, q.kk);
  for (int i = 0; i < q.m; ++i) {
    const double own = q.total_for(i);
    if (own <= 0.0) continue;
    int best = -1;
    double best_load = own;  // eligible receivers are strictly less loaded
    for (int j = 0; j < q.m; ++j) {
      if (j == i) continue;
      const double load = q.total_for(j);
      if (load < best_load) {
        best_load = load;
        best = j;
      }
    }
    if (best < 0) continue;
    d.link(i, best) = 1;
    for (int k = 0; k < q.kk; ++k) d.amount(i, best, k) = 0.5 * q.at(i, k);
  }
  return d;
}

}  // namespace swarm::queue
