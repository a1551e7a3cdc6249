#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relab/types.hpp"

namespace relab {

enum class ShiftKind {
  RewardAbrupt,
  RewardGradual,
  Rotation,
  ColorSwap,
  GwSwap,
  DynamicsAbrupt,
  DynamicsGradual,
};

enum class DynamicsPayload {
  Force20To5,  // force magnitude 20 <-> 5
  BreakPpo,    // default params <-> {pole length 1.0, cart mass 2.0, force -10}
};

struct ShiftComponent {
  ShiftKind kind;
  std::int64_t interval;  // n
  DynamicsPayload payload = DynamicsPayload::Force20To5;
};

/// Declarative non-stationarity description. Components apply independently
/// and compose; evaluation is a pure function of the step counter.
struct ShiftSchedule {
  std::vector<ShiftComponent> components;

  bool has_reward_shift() const;
  bool has_observation_shift() const;
  bool has_dynamics_shift() const;
  /// Earliest step at which any component first deviates from its t=0 state.
  std::int64_t first_shift_step() const;
};

ShiftKind parse_shift_kind(const std::string& name);
std::string shift_kind_name(ShiftKind k);

/// Square wave (-1)^floor(t/n) for abrupt shifts; triangle wave with period
/// 2n for gradual ones. Always in [-1, 1] with m(0) = +1.
Scalar reward_multiplier(std::int64_t t, const ShiftComponent& component);

/// Product over all reward components in the schedule.
Scalar reward_multiplier(std::int64_t t, const ShiftSchedule& schedule);

struct CartPoleParams {
  Scalar gravity = 9.8;
  Scalar cart_mass = 1.0;
  Scalar pole_mass = 0.1;
  Scalar pole_length = 0.5;  // half-length parameter
  Scalar force_magnitude = 10.0;
  Scalar position_bound = 2.4;
  Scalar timestep = 0.02;
};

/// Effective cart-pole parameters at step t for one dynamics component.
CartPoleParams schedule_dynamics(std::int64_t t, const ShiftComponent& component,
                                 const CartPoleParams& base);

CartPoleParams schedule_dynamics(std::int64_t t, const ShiftSchedule& schedule,
                                 const CartPoleParams& base);

struct Palette {
  // RGB triples in [0,1]
  Scalar background[3];
  Scalar green[3];
  Scalar red[3];
};

// Phase-0 palette and the Color-Swap alternate; pairwise distinct colors.
Palette base_palette();
Palette swap_palette();

/// Applies each active observation component (odd phase of floor(t/n)) in
/// declaration order: 90-degree rotation, palette replacement, or exchange of
/// the green-item and background colors. obs is a flat HxHx3 image.
void transform_observation(Vector& obs, int side, const ShiftSchedule& schedule, std::int64_t t);

}  // namespace relab
