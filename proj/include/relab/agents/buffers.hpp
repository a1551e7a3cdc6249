#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "relab/types.hpp"

namespace relab {

/// Fixed-capacity on-policy buffer; filled once, consumed once per rollout.
/// Stored rewards are the mixed (intrinsic + extrinsic) rewards.
class RolloutBuffer {
 public:
  RolloutBuffer(int capacity, int obs_size);

  void push(const Vector& obs, int action, Scalar mixed_reward, Scalar value, Scalar log_prob);
  void clear() { size_ = 0; }

  bool full() const { return size_ == capacity_; }
  int size() const { return size_; }
  int capacity() const { return capacity_; }

  const Matrix& observations() const { return obs_; }  // capacity x obs_size
  const std::vector<int>& actions() const { return actions_; }
  const Vector& rewards() const { return rewards_; }
  const Vector& values() const { return values_; }
  const Vector& log_probs() const { return log_probs_; }

 private:
  int capacity_, size_ = 0;
  Matrix obs_;
  std::vector<int> actions_;
  Vector rewards_, values_, log_probs_;
};

using ObsFrame = std::shared_ptr<const Vector>;

struct Transition {
  ObsFrame obs, next_obs;
  int action;
  Scalar reward;  // extrinsic; intrinsic terms are mixed in at sample time
};

/// Ring replay buffer with optional proportional prioritization (sum tree).
/// Importance weights are identity (bias correction disabled).
class ReplayBuffer {
 public:
  ReplayBuffer(int capacity, bool prioritized, Scalar priority_exponent = 0.6);

  void push(ObsFrame obs, int action, Scalar reward, ObsFrame next_obs);

  int size() const { return size_; }
  int capacity() const { return capacity_; }
  bool prioritized() const { return prioritized_; }
  const Transition& at(int index) const { return storage_[index]; }

  /// Uniform sample, or probability proportional to p_i^alpha when
  /// prioritized. Returns storage indices.
  std::vector<int> sample(int k, std::mt19937_64& rng) const;

  /// p_i <- |TD error| + epsilon for the given storage indices.
  void update_priorities(const std::vector<int>& indices, const Vector& td_errors);

  Scalar priority(int index) const;

 private:
  void set_priority(int index, Scalar p);

  int capacity_, size_ = 0, next_ = 0;
  bool prioritized_;
  Scalar alpha_;
  Scalar max_priority_ = 1.0;
  std::vector<Transition> storage_;
  std::vector<Scalar> tree_;  // sum tree over p_i^alpha, leaves at capacity_..
};

}  // namespace relab
