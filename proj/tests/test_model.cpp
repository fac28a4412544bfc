#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "swarm/env.hpp"
#include "swarm/model.hpp"
#include "swarm/nn.hpp"
#include "swarm/rng.hpp"

using namespace swarm;
using Mat = Eigen::MatrixXd;
using model::ModelConfig;
using model::ObservationWindow;
using model::Policy;

namespace {

ModelConfig tiny_config(int m_max = 5) {
  ModelConfig mc;
  mc.d_model = 16;
  mc.n_heads = 2;
  mc.n_blocks_enc = 1;
  mc.n_blocks_dec = 1;
  mc.window = 3;
  mc.m_max = m_max;
  mc.k_max = 2;
  mc.obs_dim = env::EnvConfig::obs_dim_for(m_max, 2);
  return mc;
}

ObservationWindow random_window(const ModelConfig& mc, int n, Rng& rng) {
  ObservationWindow w;
  w.n = n;
  w.window = mc.window;
  w.rows = Mat(mc.window * n, mc.obs_dim);
  for (int r = 0; r < w.rows.rows(); ++r) {
    for (int c = 0; c < w.rows.cols(); ++c) w.rows(r, c) = 0.4 * rng.gaussian();
  }
  return w;
}

}  // namespace

TEST_CASE("orthogonal init produces orthonormal columns") {
  Rng rng(5);
  const Mat q = nn::orthogonal(8, 4, 1.0, rng);
  const Mat gram = q.transpose() * q;
  CHECK((gram - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
  const Mat wide = nn::orthogonal(3, 7, 2.0, rng);
  const Mat gram2 = wide * wide.transpose() / 4.0;  // gain^2 = 4
  CHECK((gram2 - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("encoder produces finite per-agent values and reps") {
  const ModelConfig mc = tiny_config();
  Policy policy(mc, 42);
  Rng rng(43);
  for (int n : {1, 3, 5}) {
    ad::Tape t;
    nn::TapeBinding bind(t, policy.params());
    auto enc = policy.encode(t, bind, random_window(mc, n, rng));
    const Mat reps = t.value(enc.reps);
    const Mat values = t.value(enc.values);
    CHECK(reps.rows() == n);
    CHECK(reps.cols() == mc.d_model);
    CHECK(values.rows() == n);
    CHECK(values.cols() == 1);
    CHECK(reps.allFinite());
    CHECK(values.allFinite());
  }
}

TEST_CASE("target value head matches the live head after hard update") {
  const ModelConfig mc = tiny_config();
  Policy policy(mc, 42);
  Rng rng(44);
  const ObservationWindow w = random_window(mc, 3, rng);
  ad::Tape t;
  nn::TapeBinding bind(t, policy.params());
  auto enc = policy.encode(t, bind, w);
  const Eigen::VectorXd live = t.value(enc.values).col(0);
  const Eigen::VectorXd target = policy.target_values(w);
  CHECK((live - target).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("soft update moves the target head toward the live head") {
  const ModelConfig mc = tiny_config();
  Policy policy(mc, 42);
  Rng rng(45);
  // Perturb the live value head.
  for (int i : policy.value_head_indices()) {
    Mat& v = policy.params().value(i);
    for (int r = 0; r < v.rows(); ++r) {
      for (int c = 0; c < v.cols(); ++c) v(r, c) += 0.1 * rng.gaussian();
    }
  }
  const ObservationWindow w = random_window(mc, 2, rng);
  const Eigen::VectorXd before = policy.target_values(w);
  policy.soft_update_target(0.5);
  const Eigen::VectorXd mid = policy.target_values(w);
  policy.hard_update_target();
  const Eigen::VectorXd after = policy.target_values(w);

  ad::Tape t;
  nn::TapeBinding bind(t, policy.params());
  const Eigen::VectorXd live = t.value(policy.encode(t, bind, w).values).col(0);
  CHECK((after - live).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((mid - before).norm() > 0.0);
  CHECK((mid - live).norm() < (before - live).norm() + 1e-12);
}

TEST_CASE("mixture weights are a distribution and task sensitive") {
  const ModelConfig mc = tiny_config();
  Policy policy(mc, 42);
  Rng rng(46);
  const ObservationWindow w = random_window(mc, 3, rng);
  ad::Tape t;
  nn::TapeBinding bind(t, policy.params());
  auto enc = policy.encode(t, bind, w);
  auto mix0 = policy.mixture(t, bind, enc.reps, 0);
  auto mix1 = policy.mixture(t, bind, enc.reps, 1);
  const Mat a0 = t.value(mix0.alpha);
  const Mat a1 = t.value(mix1.alpha);
  CHECK(a0.rows() == 1);
  CHECK(a0.cols() == mc.n_experts);
  CHECK(a0.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a0.minCoeff() > 0.0);
  CHECK((a0 - a1).cwiseAbs().maxCoeff() > 0.0);  // distinct task queries
  CHECK(t.value(mix0.h).rows() == 1);
  CHECK(t.value(mix0.h).cols() == mc.d_model);
}

TEST_CASE("sequential decode log-probs equal the teacher-forced pass") {
  Rng rng(47);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + int(rng.below(5));
    const ModelConfig mc = tiny_config();
    Policy policy(mc, 1000 + trial);
    const ObservationWindow w = random_window(mc, n, rng);
    const double a_bound = 2e-3;

    ad::Tape t;
    nn::TapeBinding bind(t, policy.params());
    auto enc = policy.encode(t, bind, w);
    auto mix = policy.mixture(t, bind, enc.reps, trial % 2);

    Mat pre = Mat::Zero(n, 3);
    Rng act_rng(500 + trial);
    double seq_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      auto s = policy.decode_act(t, bind, enc.reps, mix.h, pre, i, &act_rng,
                                 a_bound);
      pre.row(i) = s.pre_squash.transpose();
      seq_sum += s.logprob;
    }

    auto dec = policy.decode_logprobs(t, bind, enc.reps, mix.h, pre, n, a_bound);
    const double joint = t.value(dec.logprobs).sum();
    CHECK(std::abs(joint - seq_sum) < 1e-6);
  }
}

TEST_CASE("decoded actions respect the acceleration bound") {
  const ModelConfig mc = tiny_config();
  Policy policy(mc, 42);
  Rng rng(48), act(49);
  const int n = 3;
  const ObservationWindow w = random_window(mc, n, rng);
  ad::Tape t;
  nn::TapeBinding bind(t, policy.params());
  auto enc = policy.encode(t, bind, w);
  auto mix = policy.mixture(t, bind, enc.reps, 0);
  Mat pre = Mat::Zero(n, 3);
  for (int i = 0; i < n; ++i) {
    auto s = policy.decode_act(t, bind, enc.reps, mix.h, pre, i, &act, 2e-3);
    pre.row(i) = s.pre_squash.transpose();
    CHECK(s.action.cwiseAbs().maxCoeff() <= 2e-3);
    CHECK(std::isfinite(s.logprob));
  }
}

TEST_CASE("deterministic decode is the squashed mean and reproducible") {
  const ModelConfig mc = tiny_config();
  Policy policy(mc, 42);
  Rng rng(50);
  const ObservationWindow w = random_window(mc, 2, rng);
  auto run = [&]() {
    ad::Tape t;
    nn::TapeBinding bind(t, policy.params());
    auto enc = policy.encode(t, bind, w);
    auto mix = policy.mixture(t, bind, enc.reps, 0);
    Mat pre = Mat::Zero(2, 3);
    Mat acts(2, 3);
    for (int i = 0; i < 2; ++i) {
      auto s = policy.decode_act(t, bind, enc.reps, mix.h, pre, i, nullptr, 1.0);
      pre.row(i) = s.pre_squash.transpose();
      acts.row(i) = s.action.transpose();
    }
    return acts;
  };
  const Mat a = run(), b = run();
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("layout hash separates configurations") {
  ModelConfig a = tiny_config();
  ModelConfig b = a;
  b.d_model = 32;
  ModelConfig c = a;
  c.window = 2;
  CHECK(a.layout_hash() != b.layout_hash());
  CHECK(a.layout_hash() != c.layout_hash());
  CHECK(a.layout_hash() == tiny_config().layout_hash());
}

TEST_CASE("identical seeds build identical parameters") {
  const ModelConfig mc = tiny_config();
  Policy a(mc, 7), b(mc, 7), c(mc, 8);
  REQUIRE(a.params().count() == b.params().count());
  double diff_same = 0.0, diff_other = 0.0;
  for (int i = 0; i < a.params().count(); ++i) {
    diff_same += (a.params().value(i) - b.params().value(i)).cwiseAbs().sum();
    diff_other += (a.params().value(i) - c.params().value(i)).cwiseAbs().sum();
  }
  CHECK(diff_same == 0.0);
  CHECK(diff_other > 0.0);
}
