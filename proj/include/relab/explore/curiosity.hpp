#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "relab/agents/buffers.hpp"
#include "relab/net/network.hpp"

namespace relab {

/// Reward mixing weights: r = alpha*r_obs + beta*r_rew + lambda*r_ext with
/// lambda = 1 - alpha - beta enforced at construction.
struct IntrinsicWeights {
  Scalar alpha = 0;
  Scalar beta = 0;
  Scalar reward_error_scale = 1.0;  // 0.2 for the cart-pole preset

  IntrinsicWeights() = default;
  IntrinsicWeights(Scalar a, Scalar b, Scalar scale = 1.0);
  Scalar lambda() const { return 1 - alpha - beta; }
};

struct MixedReward {
  Scalar r_obs = 0, r_rew = 0, r_ext = 0;
  Scalar combined = 0;
};

MixedReward mix(const IntrinsicWeights& w, Scalar r_obs, Scalar r_rew, Scalar r_ext);

/// r_rew = 0.5 * (prediction - r_ext)^2 * scale
Scalar reward_intrinsic(Scalar prediction, Scalar r_ext, Scalar scale = 1.0);

/// r_obs = 0.5 * ||prediction - target||^2 / d (mean square over latent
/// dimensions, halved).
Scalar observation_intrinsic(const Vector& prediction, const Vector& target);

/// Shared encoder with forward and inverse dynamics heads. The forward
/// prediction error is the observation intrinsic reward; the inverse model's
/// action cross-entropy trains the encoder.
class Icm {
 public:
  Icm(std::vector<LayerSpec> encoder_specs, std::vector<int> input_shape, int action_count,
      int latent_dim, Scalar learning_rate, std::uint64_t seed);

  int latent_dim() const { return latent_dim_; }

  Vector encode(const Vector& obs);
  Matrix encode_batch(const Matrix& obs);

  /// r_s = 0.5 * ||forward(latent_t, a) - latent_next||^2 / d
  Scalar intrinsic_from_latents(const Vector& latent_t, int action, const Vector& latent_next);
  Scalar intrinsic(const Vector& obs_t, int action, const Vector& obs_next);

  /// Cross-entropy of the predicted action distribution (evaluation only).
  Scalar inverse_loss(const Vector& obs_t, const Vector& obs_next, int action);

  struct Losses {
    Scalar forward_loss = 0, inverse_loss = 0;
  };
  /// One Adam step on the forward model (latents detached) and one on the
  /// inverse model + encoder (the gradient path that regularizes the shared
  /// encoder against unpredictable features).
  Losses update(const Matrix& obs_t, const std::vector<int>& actions, const Matrix& obs_next);

  Network encoder, forward_net, inverse_net;
  AdamState enc_opt, fwd_opt, inv_opt;

 private:
  Matrix one_hot(const std::vector<int>& actions) const;
  int action_count_, latent_dim_;
  Scalar lr_;
};

/// g_nu: (observation, action) -> predicted extrinsic reward.
class RewardModel {
 public:
  RewardModel(std::vector<LayerSpec> specs, std::vector<int> input_shape, int action_count,
              Scalar learning_rate, std::uint64_t seed);

  Scalar predict(const Vector& obs, int action);
  Vector predict_batch(const Matrix& obs, const std::vector<int>& actions);
  /// MSE against extrinsic rewards, one Adam step; returns the loss.
  Scalar update(const Matrix& obs, const std::vector<int>& actions, const Vector& rewards);

  Network net;
  AdamState opt;

 private:
  Matrix one_hot(const std::vector<int>& actions) const;
  int action_count_;
  Scalar lr_;
};

/// Frozen random target network plus a trained predictor of the same shape.
class Rnd {
 public:
  Rnd(std::vector<LayerSpec> specs, std::vector<int> input_shape, Scalar learning_rate,
      std::uint64_t seed);

  /// Mean squared error between predictor and frozen target outputs.
  Scalar intrinsic(const Vector& obs);
  Vector intrinsic_batch(const Matrix& obs);
  Scalar update(const Matrix& obs);

  Network target_net;  // parameters never updated
  Network predictor;
  AdamState opt;

 private:
  Scalar lr_;
};

/// Visit counts over quantized observations, scoped to one PPO rollout.
class RolloutVisitTable {
 public:
  void clear() { counts_.clear(); }
  /// Increments and returns the updated count.
  int visit(std::uint64_t key);
  int count(std::uint64_t key) const;
  std::int64_t total() const;
  bool empty() const { return counts_.empty(); }

  static std::uint64_t key_of(const Vector& obs, int levels = 8);

 private:
  std::unordered_map<std::uint64_t, int> counts_;
};

enum class NoveltyVariant { Ride, Noveld };

/// RIDE: novelty_next / sqrt(count); NovelD: max(novelty_next -
/// c*novelty_t, 0) only on the first visit within the rollout. The visit
/// count is incremented before evaluation.
Scalar rollout_novelty_bonus(RolloutVisitTable& table, NoveltyVariant variant, Scalar novelty_t,
                             Scalar novelty_next, std::uint64_t key_next, Scalar noveld_c = 0.5);

enum class ExploreVariant { None, Icm, Rnd, Ride, Noveld };

ExploreVariant parse_explore_variant(const std::string& name);
std::string explore_variant_name(ExploreVariant v);

struct ExplorationConfig {
  ExploreVariant variant = ExploreVariant::None;
  IntrinsicWeights weights;
  Scalar model_learning_rate = 3e-4;
  // Model training is decoupled from the policy and may run on a faster
  // timescale: passes over each rollout in the on-policy case.
  int model_epochs = 1;
};

struct StepIntrinsics {
  Scalar r_obs = 0;   // variant novelty bonus entering the mix
  Scalar r_rew = 0;   // reward-model intrinsic entering the mix
  Scalar fwd_err = 0; // dense observation-model error trace (changepoint signal)
  Scalar rm_err = 0;  // dense reward-model squared-error trace
  MixedReward mixed;
};

struct ExplorationLosses {
  Scalar forward_loss = 0, inverse_loss = 0, reward_loss = 0, rnd_loss = 0;
  bool any = false;
};

/// Owns whichever curiosity components the chosen variant needs and applies
/// the reward mixing of the combined update loop.
class ExplorationStack {
 public:
  /// obs_shape: {h,w,c} for image observations or {n} for flat ones.
  ExplorationStack(const ExplorationConfig& config, std::vector<int> obs_shape, int action_count,
                   std::uint64_t seed);

  bool active() const { return config_.variant != ExploreVariant::None; }
  const ExplorationConfig& config() const { return config_; }

  /// Clears rollout-scoped state and primes the latent cache.
  void begin_rollout(const Vector& obs0);

  StepIntrinsics on_step(const Vector& obs_t, int action, const Vector& obs_next, Scalar r_ext);

  /// One pass over the given transitions in minibatches, one Adam step per
  /// model per minibatch.
  ExplorationLosses update(const Matrix& obs_t, const std::vector<int>& actions,
                           const Matrix& obs_next, const Vector& ext_rewards,
                           int minibatch_size, std::mt19937_64& rng);

  /// Sample-time mixed rewards for an off-policy batch (also returns the
  /// per-sample intrinsics so callers can log them).
  Vector mixed_batch_rewards(const ReplayBuffer& buffer, const std::vector<int>& indices);

  std::optional<Icm> icm;
  std::optional<RewardModel> reward_model;
  std::optional<Rnd> rnd;
  RolloutVisitTable visit_table;

 private:
  ExplorationConfig config_;
  int action_count_;
  Vector prev_latent_;
  Scalar prev_rnd_err_ = 0;
  bool primed_ = false;
};

}  // namespace relab
