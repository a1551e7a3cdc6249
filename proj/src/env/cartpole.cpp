#include "relab/env/cartpole.hpp"

#include "relab/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace relab {

namespace {
constexpr Scalar kPi = 3.14159265358979323846;
constexpr Scalar kRadToDeg = 180.0 / kPi;
}  // namespace

Scalar cartpole_reward(Scalar x, Scalar theta_deg) {
  if (!std::isfinite(x) || !std::isfinite(theta_deg))
    throw std::invalid_argument("cartpole_reward: non-finite input");
  return Scalar(1) - Scalar(11.52) * x * x - theta_deg * theta_deg / Scalar(288);
}

CartPoleEnv::CartPoleEnv(CartPoleParams base, std::uint64_t seed) : base_(base), seed_(seed) {
  if (base_.gravity <= 0 || base_.cart_mass <= 0 || base_.pole_mass <= 0)
    throw std::invalid_argument("CartPoleEnv: masses and gravity must be positive");
  obs_.resize(kCartObsSize);
  reset();
}

const Vector& CartPoleEnv::reset() {
  auto rng = derive_rng(seed_, Stream::EnvMisc);
  std::uniform_real_distribution<Scalar> dist(-0.05, 0.05);
  state_ = CartPoleState{};
  state_.x = dist(rng);
  state_.x_dot = dist(rng);
  state_.theta = dist(rng);
  state_.theta_dot = dist(rng);
  render();
  return obs_;
}

const Vector& CartPoleEnv::step(CartAction action, const ShiftSchedule& schedule,
                                Scalar* reward_out) {
  if (!std::isfinite(state_.x) || !std::isfinite(state_.x_dot) || !std::isfinite(state_.theta) ||
      !std::isfinite(state_.theta_dot))
    throw std::runtime_error("cartpole_step: non-finite state");

  const CartPoleParams p = schedule_dynamics(state_.t, schedule, base_);
  const Scalar force = (action == CartAction::Right) ? p.force_magnitude : -p.force_magnitude;
  const Scalar total_mass = p.cart_mass + p.pole_mass;
  const Scalar polemass_length = p.pole_mass * p.pole_length;
  const Scalar cos_t = std::cos(state_.theta);
  const Scalar sin_t = std::sin(state_.theta);

  const Scalar temp =
      (force + polemass_length * state_.theta_dot * state_.theta_dot * sin_t) / total_mass;
  const Scalar theta_acc =
      (p.gravity * sin_t - cos_t * temp) /
      (p.pole_length * (Scalar(4.0 / 3.0) - p.pole_mass * cos_t * cos_t / total_mass));
  const Scalar x_acc = temp - polemass_length * theta_acc * cos_t / total_mass;

  state_.x += p.timestep * state_.x_dot;
  state_.x_dot += p.timestep * x_acc;
  state_.theta += p.timestep * state_.theta_dot;
  state_.theta_dot += p.timestep * theta_acc;

  // edge clamp: velocity (and with it the integrated acceleration) zeroed
  if (state_.x >= p.position_bound) {
    state_.x = p.position_bound;
    state_.x_dot = 0;
  } else if (state_.x <= -p.position_bound) {
    state_.x = -p.position_bound;
    state_.x_dot = 0;
  }

  const Scalar theta_deg = state_.theta * kRadToDeg;
  const Scalar reward = cartpole_reward(state_.x, theta_deg);

  if (std::abs(theta_deg) > kDropThresholdDeg) {
    state_.theta = 0;
    state_.theta_dot = 0;
  }

  state_.t += 1;
  render();
  if (reward_out) *reward_out = reward;
  return obs_;
}

void CartPoleEnv::render() {
  obs_(0) = state_.x;
  obs_(1) = state_.x_dot;
  obs_(2) = state_.theta;
  obs_(3) = state_.theta_dot;
}

}  // namespace relab
