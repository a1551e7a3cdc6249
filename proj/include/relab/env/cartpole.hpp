#pragma once

#include "relab/env/schedule.hpp"
#include "relab/types.hpp"

namespace relab {

enum class CartAction { Left = 0, Right = 1 };
constexpr int kCartActionCount = 2;
constexpr int kCartObsSize = 4;

/// r = 1 - 11.52 x^2 - theta_deg^2 / 288, theta given in degrees.
Scalar cartpole_reward(Scalar x, Scalar theta_deg);

struct CartPoleState {
  Scalar x = 0, x_dot = 0;
  Scalar theta = 0, theta_dot = 0;  // radians
  std::int64_t t = 0;
};

/// Infinite-horizon cart-pole: no episode terminations. The cart clamps at
/// the position bound with velocity zeroed; the pole resets to upright when
/// it drops past the angle threshold while the cart state persists.
class CartPoleEnv {
 public:
  static constexpr Scalar kDropThresholdDeg = 12.0;

  CartPoleEnv(CartPoleParams base, std::uint64_t seed);

  const Vector& reset();
  const Vector& step(CartAction action, const ShiftSchedule& schedule, Scalar* reward_out);

  const CartPoleState& state() const { return state_; }
  void set_state(const CartPoleState& s) { state_ = s; }
  std::int64_t step_count() const { return state_.t; }
  const Vector& observation() const { return obs_; }

 private:
  void render();

  CartPoleParams base_;
  CartPoleState state_;
  std::uint64_t seed_;
  Vector obs_;
};

}  // namespace relab
