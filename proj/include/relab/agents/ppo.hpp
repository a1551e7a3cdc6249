#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "relab/agents/buffers.hpp"
#include "relab/net/network.hpp"

namespace relab {

struct PpoHyperparams {
  Scalar learning_rate = 3e-4;
  int rollout_steps = 2048;
  int minibatch_size = 64;
  int epochs = 10;
  Scalar gamma = 0.99;
  Scalar gae_lambda = 0.95;
  Scalar clip_range = 0.2;
  Scalar value_coef = 0.5;
  Scalar entropy_coef = 0.0;  // 0.01 for the max-entropy variant
  Scalar max_grad_norm = 0.5;
  bool normalize_advantage = true;

  void validate() const;
};

/// Shared feature trunk with separate policy-logit and value heads.
class ActorCritic {
 public:
  ActorCritic(std::vector<LayerSpec> trunk_specs, std::vector<int> input_shape, int feature_dim,
              int action_count, std::uint64_t seed);

  int action_count() const { return action_count_; }

  /// Batched no-grad style evaluation (uses the forward caches, so do not
  /// interleave with training backward passes).
  void evaluate(const Matrix& obs, Matrix& logits, Vector& values);

  /// Samples an action from the softmax policy for one observation.
  int act(const Vector& obs, std::mt19937_64& rng, Scalar* log_prob, Scalar* value);

  Scalar value_of(const Vector& obs);

  Network trunk, pi_head, v_head;
  AdamState trunk_opt, pi_opt, v_opt;

 private:
  int action_count_;
};

struct PpoLossReport {
  Scalar policy_loss = 0;
  Scalar value_loss = 0;
  Scalar entropy = 0;
  int skipped_minibatches = 0;
};

/// Row-wise log-softmax of logits.
Matrix log_softmax(const Matrix& logits);

/// One PPO improvement phase: `epochs` passes of shuffled minibatches with
/// the clipped surrogate, value MSE and entropy bonus; per-minibatch
/// advantage normalization and global gradient-norm clipping.
PpoLossReport ppo_update(ActorCritic& ac, const RolloutBuffer& rollout, const Vector& advantages,
                         const Vector& returns, const PpoHyperparams& hp, std::mt19937_64& rng);

}  // namespace relab
