#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "relab/agents/dqn.hpp"
#include "relab/agents/gae.hpp"
#include "relab/agents/ppo.hpp"
#include "relab/net/architectures.hpp"

using namespace relab;

namespace {

// Brute-force discounted-sum oracle for GAE(lambda).
Vector gae_oracle(const Vector& rewards, const Vector& values, Scalar bootstrap, Scalar gamma,
                  Scalar lambda) {
  const Eigen::Index n = rewards.size();
  Vector adv(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    Scalar sum = 0;
    for (Eigen::Index k = 0; t + k < n; ++k) {
      Scalar next_v = (t + k == n - 1) ? bootstrap : values(t + k + 1);
      Scalar delta = rewards(t + k) + gamma * next_v - values(t + k);
      sum += std::pow(gamma * lambda, static_cast<Scalar>(k)) * delta;
    }
    adv(t) = sum;
  }
  return adv;
}

ObsFrame frame(std::initializer_list<Scalar> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (Scalar s : v) x(i++) = s;
  return std::make_shared<const Vector>(std::move(x));
}

}  // namespace

TEST_CASE("single-step advantage equals the TD error") {
  Vector r(1), v(1);
  r << 1.0;
  v << 0.0;
  GaeResult g = compute_gae(r, v, 0.0, 0.99, 0.95);
  CHECK(g.advantages(0) == 1.0);
  CHECK(g.returns(0) == 1.0);
}

TEST_CASE("lambda 0 reduces to one-step TD errors") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<Scalar> d(-1, 1);
  Vector r(50), v(50);
  for (int i = 0; i < 50; ++i) {
    r(i) = d(rng);
    v(i) = d(rng);
  }
  Scalar boot = d(rng);
  GaeResult g = compute_gae(r, v, boot, 0.99, 0.0);
  for (int t = 0; t < 50; ++t) {
    Scalar next_v = t == 49 ? boot : v(t + 1);
    CHECK(g.advantages(t) == doctest::Approx(r(t) + 0.99 * next_v - v(t)).epsilon(1e-12));
  }
}

TEST_CASE("gae matches the brute-force oracle for lambda 1 and 0.95") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<Scalar> d(-1, 1);
  for (int trial = 0; trial < 100; ++trial) {
    Vector r(100), v(100);
    for (int i = 0; i < 100; ++i) {
      r(i) = d(rng);
      v(i) = d(rng);
    }
    Scalar boot = d(rng);
    for (Scalar lam : {1.0, 0.95}) {
      GaeResult g = compute_gae(r, v, boot, 0.99, lam);
      Vector oracle = gae_oracle(r, v, boot, 0.99, lam);
      CHECK((g.advantages - oracle).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("gae rejects empty and mismatched inputs") {
  CHECK_THROWS_AS(compute_gae(Vector(), Vector(), 0, 0.99, 0.95), std::invalid_argument);
  CHECK_THROWS_AS(compute_gae(Vector::Ones(3), Vector::Ones(2), 0, 0.99, 0.95),
                  std::invalid_argument);
}

TEST_CASE("ppo hyperparameter defaults and validation") {
  PpoHyperparams hp;
  CHECK(hp.learning_rate == 3e-4);
  CHECK(hp.rollout_steps == 2048);
  CHECK(hp.minibatch_size == 64);
  CHECK(hp.epochs == 10);
  CHECK(hp.gamma == 0.99);
  CHECK(hp.gae_lambda == 0.95);
  CHECK(hp.clip_range == 0.2);
  CHECK(hp.value_coef == 0.5);
  CHECK(hp.entropy_coef == 0.0);
  CHECK(hp.max_grad_norm == 0.5);
  hp.gamma = 1.0;
  CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
}

TEST_CASE("ppo learns a two-armed bandit") {
  // obs is constant; action 0 always yields +1, action 1 yields -1
  PpoHyperparams hp;
  hp.rollout_steps = 256;
  hp.minibatch_size = 64;
  hp.epochs = 4;
  hp.learning_rate = 0.01;  // Adam moves ~lr per step; keep the test short
  ActorCritic ac(mlp_trunk(2, 16), {2}, 16, 2, 7);
  std::mt19937_64 act_rng(1), upd_rng(2);
  Vector obs(2);
  obs << 0.5, 0.5;

  auto prob0 = [&]() {
    Matrix logits;
    Vector values;
    ac.evaluate(obs.transpose(), logits, values);
    Matrix lp = log_softmax(logits);
    return std::exp(lp(0, 0));
  };
  Scalar before = prob0();

  for (int iter = 0; iter < 10; ++iter) {
    RolloutBuffer roll(hp.rollout_steps, 2);
    while (!roll.full()) {
      Scalar lp = 0, v = 0;
      int a = ac.act(obs, act_rng, &lp, &v);
      roll.push(obs, a, a == 0 ? 1.0 : -1.0, v, lp);
    }
    GaeResult g = compute_gae(roll.rewards(), roll.values(), ac.value_of(obs), hp.gamma,
                              hp.gae_lambda);
    PpoLossReport rep = ppo_update(ac, roll, g.advantages, g.returns, hp, upd_rng);
    CHECK(rep.skipped_minibatches == 0);
  }
  CHECK(prob0() > 0.9);
  CHECK(prob0() > before);
  CHECK(ac.trunk.parameters_finite());
}

TEST_CASE("log_softmax rows are normalized log probabilities") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<Scalar> d(-10, 10);
  Matrix logits(4, 6);
  for (int i = 0; i < logits.size(); ++i) logits.data()[i] = d(rng);
  Matrix lp = log_softmax(logits);
  for (int r = 0; r < 4; ++r)
    CHECK(lp.row(r).array().exp().sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("epsilon schedule endpoints and informed restart") {
  EpsilonSchedule s;
  s.horizon = 1000000;
  CHECK(epsilon_at(0, s) == 1.0);
  CHECK(epsilon_at(100000, s) == 0.05);
  CHECK(epsilon_at(999999, s) == 0.05);
  CHECK(epsilon_at(50000, s) == doctest::Approx(0.525));

  EpsilonSchedule informed = s;
  informed.informed = true;
  informed.interval = 1000000;
  informed.horizon = 10000000;
  CHECK(epsilon_at(1000000, informed) == 1.0);
  // periodic with period n and non-increasing within one segment
  for (std::int64_t t : {0LL, 12345LL, 600000LL, 999999LL})
    CHECK(epsilon_at(t, informed) == epsilon_at(t + 1000000, informed));
  for (std::int64_t t = 0; t + 1000 < 1000000; t += 1000)
    CHECK(epsilon_at(t + 1000, informed) <= epsilon_at(t, informed));
}

TEST_CASE("dqn targets") {
  Vector r(1);
  r << 1.0;
  Matrix q(1, 3);
  q << 0.0, 2.0, -1.0;
  CHECK(dqn_targets(r, q, 0.99, false, 0.1)(0) == doctest::Approx(2.98));
  CHECK(dqn_targets(r, q, 0.0, false, 0.1)(0) == 1.0);
  // soft-Q with one action reduces to that Q-value
  Matrix q1(1, 1);
  q1 << 1.7;
  CHECK(dqn_targets(r, q1, 0.99, true, 0.1)(0) == doctest::Approx(1.0 + 0.99 * 1.7));
  // soft-Q upper-bounds the hard max
  CHECK(dqn_targets(r, q, 0.99, true, 0.1)(0) >= dqn_targets(r, q, 0.99, false, 0.1)(0));
}

TEST_CASE("action selection modes") {
  std::mt19937_64 rng(4);
  Vector q(3);
  q << 0.1, 0.9, 0.3;
  for (int i = 0; i < 20; ++i)
    CHECK(select_action(q, ActionMode::EpsilonGreedy, 0.0, rng) == 1);

  // equal Q-values: softmax sampling is close to uniform
  Vector eq = Vector::Constant(3, 0.5);
  std::map<int, int> counts;
  for (int i = 0; i < 30000; ++i) ++counts[select_action(eq, ActionMode::Stochastic, 1.0, rng)];
  for (auto& [a, c] : counts) CHECK(std::abs(c / 30000.0 - 1.0 / 3) < 0.02);

  // one Q larger by 20 * temperature dominates
  Vector dom(3);
  dom << 0.0, 20.0, 0.0;
  int hits = 0;
  for (int i = 0; i < 5000; ++i)
    hits += select_action(dom, ActionMode::Stochastic, 1.0, rng) == 1;
  CHECK(hits >= 4990);
}

TEST_CASE("replay buffer evicts oldest transitions") {
  ReplayBuffer buf(10, false);
  for (int i = 0; i < 13; ++i)
    buf.push(frame({static_cast<Scalar>(i)}), 0, static_cast<Scalar>(i), frame({0.0}));
  CHECK(buf.size() == 10);
  // transitions 0..2 are gone; storage holds 3..12
  std::vector<Scalar> rewards;
  for (int i = 0; i < buf.size(); ++i) rewards.push_back(buf.at(i).reward);
  std::sort(rewards.begin(), rewards.end());
  CHECK(rewards.front() == 3.0);
  CHECK(rewards.back() == 12.0);
}

TEST_CASE("uniform sampling when priorities are equal, and with per alpha 0") {
  std::mt19937_64 rng(5);
  for (bool use_alpha0 : {false, true}) {
    ReplayBuffer buf(8, true, use_alpha0 ? 0.0 : 0.6);
    for (int i = 0; i < 8; ++i) buf.push(frame({0.0}), 0, 0, frame({0.0}));
    if (use_alpha0) {
      // spread priorities; alpha 0 must still sample uniformly
      std::vector<int> idx = {0, 1, 2, 3, 4, 5, 6, 7};
      Vector td(8);
      for (int i = 0; i < 8; ++i) td(i) = i * 10.0;
      buf.update_priorities(idx, td);
    }
    std::vector<int> counts(8, 0);
    const int draws = 80000;
    for (int d = 0; d < draws; ++d)
      for (int i : buf.sample(1, rng)) ++counts[i];
    for (int c : counts) CHECK(std::abs(c / static_cast<double>(draws) - 0.125) < 0.01);
  }
}

TEST_CASE("a dominant priority is sampled almost always") {
  std::mt19937_64 rng(6);
  ReplayBuffer buf(50, true, 0.6);
  for (int i = 0; i < 50; ++i) buf.push(frame({0.0}), 0, 0, frame({0.0}));
  std::vector<int> all(50);
  Vector td = Vector::Ones(50);
  for (int i = 0; i < 50; ++i) all[i] = i;
  td(17) = 1e6;
  buf.update_priorities(all, td);
  int hits = 0;
  const int draws = 2000;
  for (int d = 0; d < draws; ++d) hits += buf.sample(1, rng)[0] == 17;
  CHECK(hits >= static_cast<int>(draws * 0.985));
}

TEST_CASE("per sampling frequencies match the p^alpha distribution") {
  std::mt19937_64 rng(7);
  const int n = 16;
  ReplayBuffer buf(n, true, 0.6);
  for (int i = 0; i < n; ++i) buf.push(frame({0.0}), 0, 0, frame({0.0}));
  std::vector<int> all(n);
  Vector td(n);
  for (int i = 0; i < n; ++i) {
    all[i] = i;
    td(i) = 0.25 + i;  // update sets p = |td| + 1e-6
  }
  buf.update_priorities(all, td);

  double z = 0;
  std::vector<double> expect(n);
  for (int i = 0; i < n; ++i) z += std::pow(std::abs(td(i)) + 1e-6, 0.6);
  for (int i = 0; i < n; ++i) expect[i] = std::pow(std::abs(td(i)) + 1e-6, 0.6) / z;

  const int draws = 100000;
  std::vector<int> counts(n, 0);
  for (int d = 0; d < draws; ++d) ++counts[buf.sample(1, rng)[0]];
  for (int i = 0; i < n; ++i) {
    double se = std::sqrt(expect[i] * (1 - expect[i]) / draws);
    CHECK(std::abs(counts[i] / static_cast<double>(draws) - expect[i]) <= 3 * se + 1e-9);
  }
}

TEST_CASE("dqn hyperparameter defaults") {
  DqnHyperparams hp;
  CHECK(hp.learning_rate == 1e-4);
  CHECK(hp.buffer_capacity == 1000000);
  CHECK(hp.learning_starts == 50000);
  CHECK(hp.batch_size == 32);
  CHECK(hp.tau == 1.0);
  CHECK(hp.gamma == 0.99);
  CHECK(hp.update_frequency == 4);
  CHECK(hp.target_update_interval == 10000);
  CHECK(hp.epsilon.initial == 1.0);
  CHECK(hp.epsilon.final_value == 0.05);
  CHECK(hp.epsilon.fraction == 0.1);
  CHECK(hp.max_grad_norm == 10.0);
  CHECK(hp.per_alpha == 0.6);
}

TEST_CASE("dqn training loop gating and hard target sync") {
  DqnHyperparams hp;
  hp.buffer_capacity = 256;
  hp.learning_starts = 64;
  hp.batch_size = 16;
  hp.update_frequency = 4;
  hp.target_update_interval = 100;
  hp.epsilon.horizon = 1000;

  std::vector<LayerSpec> q_specs = mlp_trunk(3, 8);
  q_specs.push_back(LayerSpec::linear(8, 2));
  DqnAgent agent(q_specs, {3}, hp, 9);
  std::mt19937_64 rng(10);
  ReplayBuffer buf(hp.buffer_capacity, false);
  std::uniform_real_distribution<Scalar> d(0, 1);

  auto reward_of = [](ReplayBuffer& b, const std::vector<int>& idx) {
    Vector r(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) r(i) = b.at(idx[i]).reward;
    return r;
  };

  bool updated_before_start = false, synced_at_100 = false;
  for (std::int64_t t = 0; t < 300; ++t) {
    Vector o(3);
    o << d(rng), d(rng), d(rng);
    buf.push(std::make_shared<const Vector>(o), t % 2, d(rng),
             std::make_shared<const Vector>(o));
    DqnLossReport rep = agent.maybe_update(buf, t, rng, reward_of);
    if (t < hp.learning_starts && rep.updated) updated_before_start = true;
    if (rep.updated) CHECK(t % hp.update_frequency == 0);
    if (rep.target_synced) {
      CHECK(t % hp.target_update_interval == 0);
      CHECK(agent.qnet.parameters_equal(agent.target));
      if (t == 100) synced_at_100 = true;
    }
  }
  CHECK_FALSE(updated_before_start);
  CHECK(synced_at_100);
  CHECK(agent.qnet.parameters_finite());
}
