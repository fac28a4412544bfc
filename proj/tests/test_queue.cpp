#include <cmath>

#include "doctest.h"
#include "swarm/queue.hpp"
#include "swarm/rng.hpp"

using namespace swarm;
using queue::OffloadDecision;
using queue::QueueState;
using queue::SensedLoad;

TEST_CASE("own term follows the update rule") {
  QueueState q(2, 1);
  q.at(0, 0) = 10.0;
  OffloadDecision d(2, 1);
  d.link(0, 1) = 1;
  d.amount(0, 1, 0) = 4.0;
  SensedLoad s(2, 1);
  s.at(0, 0) = 2.0;
  const auto out = queue::update_queue(q, d, s);
  CHECK(out.at(0, 0) == doctest::Approx(8.0));   // 10 - 4 + 2
  CHECK(out.at(1, 0) == doctest::Approx(4.0));   // receiver gains same step
}

TEST_CASE("clamp case") {
  QueueState q(2, 1);
  q.at(0, 0) = 3.0;
  OffloadDecision d(2, 1);
  d.link(0, 1) = 1;
  d.amount(0, 1, 0) = 5.0;
  SensedLoad s(2, 1);
  s.at(0, 0) = 1.0;
  const auto out = queue::update_queue(q, d, s);
  CHECK(out.at(0, 0) == doctest::Approx(1.0));  // [3-5]+ + 1
}

TEST_CASE("no offloading and no sensing leaves the queue unchanged") {
  QueueState q(3, 2);
  q.at(0, 0) = 1.0;
  q.at(2, 1) = 7.5;
  const auto out =
      queue::update_queue(q, OffloadDecision(3, 2), SensedLoad(3, 2));
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 2; ++k) CHECK(out.at(i, k) == q.at(i, k));
  }
}

TEST_CASE("local compute drains before the clamp") {
  QueueState q(1, 1);
  q.at(0, 0) = 0.5;
  const auto out = queue::update_queue(q, OffloadDecision(1, 1),
                                       SensedLoad(1, 1), /*c_local=*/1.0);
  CHECK(out.at(0, 0) == 0.0);  // clamped, not negative
}

TEST_CASE("backlog penalty is minus lambda times the total") {
  QueueState q(2, 2);
  q.at(0, 0) = 1.0;
  q.at(1, 1) = 3.0;
  CHECK(queue::backlog_penalty(q, 0.01) == doctest::Approx(-0.04));
  CHECK(q.total() == doctest::Approx(4.0));
  CHECK(q.total_for(1) == doctest::Approx(3.0));
}

TEST_CASE("greedy offload keeps the decision invariants") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    QueueState q(4, 2);
    for (auto& v : q.q) v = rng.uniform() * 10.0;
    const auto d = queue::greedy_offload(q);
    for (int i = 0; i < 4; ++i) {
      CHECK(d.link(i, i) == 0);
      for (int j = 0; j < 4; ++j) {
        CHECK((d.link(i, j) == 0 || d.link(i, j) == 1));
        for (int k = 0; k < 2; ++k) {
          CHECK(d.amount(i, j, k) >= 0.0);
          if (d.link(i, j) == 0) CHECK(d.amount(i, j, k) == 0.0);
        }
      }
    }
  }
}

TEST_CASE("randomized safety: backlog never goes negative") {
  Rng rng(77);
  QueueState q(3, 2);
  int checked = 0;
  for (int step = 0; step < 100000; ++step) {
    OffloadDecision d(3, 2);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (i == j) continue;
        if (rng.uniform() < 0.3) {
          d.link(i, j) = 1;
          for (int k = 0; k < 2; ++k) {
            d.amount(i, j, k) = rng.uniform() * 5.0;  // may exceed the backlog
          }
        }
      }
    }
    SensedLoad s(3, 2);
    for (auto& v : s.s) v = rng.uniform() < 0.5 ? rng.uniform() * 2.0 : 0.0;
    q = queue::update_queue(q, d, s, rng.uniform());
    for (double v : q.q) {
      REQUIRE(v >= 0.0);
      REQUIRE(std::isfinite(v));
      ++checked;
    }
  }
  CHECK(checked == 100000 * 6);
}
