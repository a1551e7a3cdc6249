#include "relab/env/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace relab {

bool ShiftSchedule::has_reward_shift() const {
  for (const auto& c : components)
    if (c.kind == ShiftKind::RewardAbrupt || c.kind == ShiftKind::RewardGradual) return true;
  return false;
}

bool ShiftSchedule::has_observation_shift() const {
  for (const auto& c : components)
    if (c.kind == ShiftKind::Rotation || c.kind == ShiftKind::ColorSwap ||
        c.kind == ShiftKind::GwSwap)
      return true;
  return false;
}

bool ShiftSchedule::has_dynamics_shift() const {
  for (const auto& c : components)
    if (c.kind == ShiftKind::DynamicsAbrupt || c.kind == ShiftKind::DynamicsGradual) return true;
  return false;
}

std::int64_t ShiftSchedule::first_shift_step() const {
  std::int64_t first = -1;
  for (const auto& c : components) {
    // gradual components start drifting immediately after t=0; abrupt ones
    // first deviate at t=n
    std::int64_t s = (c.kind == ShiftKind::RewardGradual || c.kind == ShiftKind::DynamicsGradual)
                         ? 1
                         : c.interval;
    if (first < 0 || s < first) first = s;
  }
  return first;
}

ShiftKind parse_shift_kind(const std::string& name) {
  if (name == "reward-abrupt") return ShiftKind::RewardAbrupt;
  if (name == "reward-gradual") return ShiftKind::RewardGradual;
  if (name == "rotation") return ShiftKind::Rotation;
  if (name == "color-swap") return ShiftKind::ColorSwap;
  if (name == "gw-swap") return ShiftKind::GwSwap;
  if (name == "dynamics-abrupt") return ShiftKind::DynamicsAbrupt;
  if (name == "dynamics-gradual") return ShiftKind::DynamicsGradual;
  throw std::invalid_argument("unknown shift kind: " + name);
}

std::string shift_kind_name(ShiftKind k) {
  switch (k) {
    case ShiftKind::RewardAbrupt: return "reward-abrupt";
    case ShiftKind::RewardGradual: return "reward-gradual";
    case ShiftKind::Rotation: return "rotation";
    case ShiftKind::ColorSwap: return "color-swap";
    case ShiftKind::GwSwap: return "gw-swap";
    case ShiftKind::DynamicsAbrupt: return "dynamics-abrupt";
    case ShiftKind::DynamicsGradual: return "dynamics-gradual";
  }
  return "?";
}

namespace {

std::int64_t phase(std::int64_t t, std::int64_t n) { return t / n; }

}  // namespace

Scalar reward_multiplier(std::int64_t t, const ShiftComponent& c) {
  if (t < 0) throw std::invalid_argument("reward_multiplier: negative step");
  const std::int64_t n = c.interval;
  switch (c.kind) {
    case ShiftKind::RewardAbrupt:
      return (phase(t, n) % 2 == 0) ? Scalar(1) : Scalar(-1);
    case ShiftKind::RewardGradual: {
      std::int64_t u = t % (2 * n);
      if (u <= n) return Scalar(1) - Scalar(2) * static_cast<Scalar>(u) / static_cast<Scalar>(n);
      return Scalar(-1) + Scalar(2) * static_cast<Scalar>(u - n) / static_cast<Scalar>(n);
    }
    default:
      throw std::invalid_argument("reward_multiplier: not a reward component");
  }
}

Scalar reward_multiplier(std::int64_t t, const ShiftSchedule& schedule) {
  Scalar m = 1;
  for (const auto& c : schedule.components)
    if (c.kind == ShiftKind::RewardAbrupt || c.kind == ShiftKind::RewardGradual)
      m *= reward_multiplier(t, c);
  return m;
}

CartPoleParams schedule_dynamics(std::int64_t t, const ShiftComponent& c,
                                 const CartPoleParams& base) {
  if (t < 0) throw std::invalid_argument("schedule_dynamics: negative step");
  CartPoleParams p = base;
  const std::int64_t n = c.interval;
  switch (c.kind) {
    case ShiftKind::DynamicsAbrupt: {
      bool odd = phase(t, n) % 2 != 0;
      if (c.payload == DynamicsPayload::Force20To5) {
        p.force_magnitude = odd ? Scalar(5) : Scalar(20);
      } else if (odd) {
        p.pole_length = 1.0;
        p.cart_mass = 2.0;
        p.force_magnitude = -10.0;
      }
      return p;
    }
    case ShiftKind::DynamicsGradual: {
      if (c.payload != DynamicsPayload::Force20To5)
        throw std::invalid_argument("schedule_dynamics: gradual shift requires a force payload");
      std::int64_t u = t % (2 * n);
      Scalar frac = (u <= n) ? static_cast<Scalar>(u) / static_cast<Scalar>(n)
                             : static_cast<Scalar>(2 * n - u) / static_cast<Scalar>(n);
      p.force_magnitude = Scalar(20) + frac * (Scalar(5) - Scalar(20));
      return p;
    }
    default:
      throw std::invalid_argument("schedule_dynamics: not a dynamics component");
  }
}

CartPoleParams schedule_dynamics(std::int64_t t, const ShiftSchedule& schedule,
                                 const CartPoleParams& base) {
  CartPoleParams p = base;
  for (const auto& c : schedule.components)
    if (c.kind == ShiftKind::DynamicsAbrupt || c.kind == ShiftKind::DynamicsGradual)
      p = schedule_dynamics(t, c, p);
  return p;
}

Palette base_palette() { return Palette{{1, 1, 1}, {0, 1, 0}, {1, 0, 0}}; }
Palette swap_palette() { return Palette{{0, 0, 0}, {1, 0, 1}, {0, 1, 1}}; }

namespace {

bool color_eq(const Scalar* px, const Scalar* c) {
  return px[0] == c[0] && px[1] == c[1] && px[2] == c[2];
}

void map_colors(Vector& obs, int side, const Palette& from, const Palette& to) {
  for (int i = 0; i < side * side; ++i) {
    Scalar* px = obs.data() + 3 * i;
    const Scalar* repl = nullptr;
    if (color_eq(px, from.background))
      repl = to.background;
    else if (color_eq(px, from.green))
      repl = to.green;
    else if (color_eq(px, from.red))
      repl = to.red;
    if (repl) {
      px[0] = repl[0];
      px[1] = repl[1];
      px[2] = repl[2];
    }
  }
}

void rotate90(Vector& obs, int side) {
  Vector out(obs.size());
  // pixel (i, j) -> (j, side-1-i)
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j)
      for (int ch = 0; ch < 3; ++ch)
        out((j * side + (side - 1 - i)) * 3 + ch) = obs((i * side + j) * 3 + ch);
  obs = std::move(out);
}

}  // namespace

void transform_observation(Vector& obs, int side, const ShiftSchedule& schedule, std::int64_t t) {
  if (obs.size() != static_cast<Eigen::Index>(side) * side * 3)
    throw std::invalid_argument("transform_observation: observation is not square HxHx3");
  for (const auto& c : schedule.components) {
    if (c.kind != ShiftKind::Rotation && c.kind != ShiftKind::ColorSwap &&
        c.kind != ShiftKind::GwSwap)
      continue;
    if (phase(t, c.interval) % 2 == 0) continue;  // even phase: identity
    switch (c.kind) {
      case ShiftKind::Rotation:
        rotate90(obs, side);
        break;
      case ShiftKind::ColorSwap:
        map_colors(obs, side, base_palette(), swap_palette());
        break;
      case ShiftKind::GwSwap: {
        Palette from = base_palette();
        Palette to = from;
        for (int ch = 0; ch < 3; ++ch) {
          to.green[ch] = from.background[ch];
          to.background[ch] = from.green[ch];
        }
        map_colors(obs, side, from, to);
        break;
      }
      default:
        break;
    }
  }
}

}  // namespace relab
