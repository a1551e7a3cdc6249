#pragma once

#include <stdexcept>

#include "relab/types.hpp"

namespace relab {

struct GaeResult {
  Vector advantages;
  Vector returns;
};

/// Generalized advantage estimation over one rollout. Infinite horizon: the
/// bootstrap value of the observation after the last step always closes the
/// recursion, there is no terminal masking.
inline GaeResult compute_gae(const Vector& rewards, const Vector& values, Scalar bootstrap_value,
                             Scalar gamma, Scalar gae_lambda) {
  const Eigen::Index n = rewards.size();
  if (n == 0) throw std::invalid_argument("compute_gae: empty rollout");
  if (values.size() != n) throw std::invalid_argument("compute_gae: length mismatch");
  GaeResult out;
  out.advantages.resize(n);
  Scalar last = 0;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    Scalar next_value = (t == n - 1) ? bootstrap_value : values(t + 1);
    Scalar delta = rewards(t) + gamma * next_value - values(t);
    last = delta + gamma * gae_lambda * last;
    out.advantages(t) = last;
  }
  out.returns = out.advantages + values;
  return out;
}

}  // namespace relab
