#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "relab/agents/buffers.hpp"
#include "relab/net/network.hpp"

namespace relab {

struct EpsilonSchedule {
  Scalar initial = 1.0;
  Scalar final_value = 0.05;
  Scalar fraction = 0.1;      // decay finishes after fraction * horizon steps
  std::int64_t horizon = 0;   // total training steps
  bool informed = false;      // restart the decay at every multiple of interval
  std::int64_t interval = 0;  // shift interval n for the informed variant
};

/// Linear decay from initial to final over the first fraction*horizon steps;
/// the informed variant restarts the decay at every changepoint.
Scalar epsilon_at(std::int64_t t, const EpsilonSchedule& schedule);

struct DqnHyperparams {
  Scalar learning_rate = 1e-4;
  int buffer_capacity = 1000000;
  std::int64_t learning_starts = 50000;
  int batch_size = 32;
  Scalar tau = 1.0;  // hard target copy
  Scalar gamma = 0.99;
  int update_frequency = 4;
  std::int64_t target_update_interval = 10000;
  EpsilonSchedule epsilon;
  Scalar max_grad_norm = 10.0;
  // variant flags
  bool prioritized = false;
  Scalar per_alpha = 0.6;  // beta_PER is 0: importance weights stay 1
  bool stochastic_action = false;
  Scalar stochastic_temperature = 1.0;
  bool soft_q = false;
  Scalar soft_q_temperature = 0.1;

  void validate() const;
};

/// Vanilla target y = r + gamma * max_a Q'(o', a); soft-Q replaces the max
/// by tau * logsumexp(Q'/tau). No terminal masking (infinite horizon).
Vector dqn_targets(const Vector& rewards, const Matrix& next_q, Scalar gamma, bool soft_q,
                   Scalar soft_q_temperature);

enum class ActionMode { EpsilonGreedy, Stochastic };

/// Epsilon-greedy argmax or a softmax(Q/temperature) draw.
int select_action(const Vector& q_values, ActionMode mode, Scalar epsilon_or_temperature,
                  std::mt19937_64& rng);

struct DqnLossReport {
  Scalar td_loss = 0;
  bool updated = false;
  bool target_synced = false;
};

class DqnAgent {
 public:
  DqnAgent(std::vector<LayerSpec> q_specs, std::vector<int> input_shape, DqnHyperparams hp,
           std::uint64_t seed);

  const DqnHyperparams& hp() const { return hp_; }

  int act(const Vector& obs, std::int64_t t, std::mt19937_64& rng);
  Scalar current_epsilon(std::int64_t t) const { return epsilon_at(t, hp_.epsilon); }

  /// One conditional learning step at environment step t: a gradient step
  /// every update_frequency steps after learning_starts, and a hard target
  /// sync every target_update_interval steps. `reward_of` maps a batch index
  /// list to (possibly intrinsically mixed) training rewards.
  template <typename RewardFn>
  DqnLossReport maybe_update(ReplayBuffer& buffer, std::int64_t t, std::mt19937_64& rng,
                             RewardFn&& reward_of);

  DqnLossReport gradient_step(ReplayBuffer& buffer, std::mt19937_64& rng, const Vector* rewards,
                              const std::vector<int>* fixed_indices);

  Network qnet, target;
  AdamState opt;

 private:
  DqnHyperparams hp_;
};

template <typename RewardFn>
DqnLossReport DqnAgent::maybe_update(ReplayBuffer& buffer, std::int64_t t, std::mt19937_64& rng,
                                     RewardFn&& reward_of) {
  DqnLossReport report;
  if (t >= hp_.learning_starts && t % hp_.update_frequency == 0 &&
      buffer.size() >= hp_.batch_size) {
    std::vector<int> idx = buffer.sample(hp_.batch_size, rng);
    Vector rewards = reward_of(buffer, idx);
    report = gradient_step(buffer, rng, &rewards, &idx);
  }
  if (t > 0 && t % hp_.target_update_interval == 0) {
    target.copy_parameters_from(qnet);
    report.target_synced = true;
  }
  return report;
}

}  // namespace relab
