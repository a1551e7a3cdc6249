#include "relab/agents/buffers.hpp"

#include <cmath>
#include <stdexcept>

namespace relab {

RolloutBuffer::RolloutBuffer(int capacity, int obs_size) : capacity_(capacity) {
  if (capacity <= 0) throw std::invalid_argument("RolloutBuffer: capacity <= 0");
  obs_.resize(capacity, obs_size);
  actions_.resize(capacity);
  rewards_.resize(capacity);
  values_.resize(capacity);
  log_probs_.resize(capacity);
}

void RolloutBuffer::push(const Vector& obs, int action, Scalar mixed_reward, Scalar value,
                         Scalar log_prob) {
  if (size_ >= capacity_) throw std::logic_error("RolloutBuffer: push into full buffer");
  obs_.row(size_) = obs.transpose();
  actions_[size_] = action;
  rewards_(size_) = mixed_reward;
  values_(size_) = value;
  log_probs_(size_) = log_prob;
  ++size_;
}

ReplayBuffer::ReplayBuffer(int capacity, bool prioritized, Scalar priority_exponent)
    : capacity_(capacity), prioritized_(prioritized), alpha_(priority_exponent) {
  if (capacity <= 0) throw std::invalid_argument("ReplayBuffer: capacity <= 0");
  storage_.resize(capacity);
  if (prioritized_) tree_.assign(2 * static_cast<std::size_t>(capacity), Scalar(0));
}

void ReplayBuffer::set_priority(int index, Scalar p) {
  std::size_t i = static_cast<std::size_t>(capacity_) + index;
  tree_[i] = std::pow(p, alpha_);
  for (i /= 2; i >= 1; i /= 2) tree_[i] = tree_[2 * i] + tree_[2 * i + 1];
}

Scalar ReplayBuffer::priority(int index) const {
  if (!prioritized_) return 1.0;
  return std::pow(tree_[static_cast<std::size_t>(capacity_) + index], Scalar(1) / alpha_);
}

void ReplayBuffer::push(ObsFrame obs, int action, Scalar reward, ObsFrame next_obs) {
  storage_[next_] = Transition{std::move(obs), std::move(next_obs), action, reward};
  // new samples get the running maximum priority so they are seen at least once
  if (prioritized_) set_priority(next_, max_priority_);
  next_ = (next_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
}

std::vector<int> ReplayBuffer::sample(int k, std::mt19937_64& rng) const {
  if (size_ == 0) throw std::logic_error("ReplayBuffer: sample from empty buffer");
  std::vector<int> out(k);
  if (!prioritized_) {
    std::uniform_int_distribution<int> dist(0, size_ - 1);
    for (int i = 0; i < k; ++i) out[i] = dist(rng);
    return out;
  }
  std::uniform_real_distribution<Scalar> dist(0.0, 1.0);
  const Scalar total = tree_[1];
  for (int i = 0; i < k; ++i) {
    Scalar mass = dist(rng) * total;
    std::size_t node = 1;
    while (node < static_cast<std::size_t>(capacity_)) {
      if (mass <= tree_[2 * node] || tree_[2 * node + 1] == 0) {
        node = 2 * node;
      } else {
        mass -= tree_[2 * node];
        node = 2 * node + 1;
      }
    }
    out[i] = static_cast<int>(node - capacity_);
    if (out[i] >= size_) out[i] = size_ - 1;  // numeric edge at the total mass
  }
  return out;
}

void ReplayBuffer::update_priorities(const std::vector<int>& indices, const Vector& td_errors) {
  if (!prioritized_) return;
  constexpr Scalar kEps = 1e-6;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    Scalar p = std::abs(td_errors(static_cast<Eigen::Index>(i))) + kEps;
    set_priority(indices[i], p);
    if (p > max_priority_) max_priority_ = p;
  }
}

}  // namespace relab
