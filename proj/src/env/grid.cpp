#include "relab/env/grid.hpp"

#include "relab/rng.hpp"

#include <stdexcept>

namespace relab {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b, r = a % b;
  return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}

std::int64_t mod_pos(std::int64_t a, std::int64_t b) {
  std::int64_t r = a % b;
  return r < 0 ? r + b : r;
}

Scalar hash_unit(std::uint64_t seed, std::int64_t x, std::int64_t y, std::uint64_t tag) {
  std::uint64_t h = seed;
  h = splitmix64(h ^ static_cast<std::uint64_t>(x) * 0x9e3779b97f4a7c15ULL);
  h = splitmix64(h ^ static_cast<std::uint64_t>(y) * 0xc2b2ae3d27d4eb4fULL);
  h = splitmix64(h ^ tag);
  return static_cast<Scalar>(h >> 11) * 0x1p-53;
}

}  // namespace

std::size_t GridWorld::ChunkKeyHash::operator()(const ChunkKey& k) const {
  return static_cast<std::size_t>(
      splitmix64(static_cast<std::uint64_t>(k.cx) * 0x9e3779b97f4a7c15ULL ^
                 static_cast<std::uint64_t>(k.cy)));
}

GridWorld::GridWorld(GridConfig config, std::uint64_t seed) : config_(config) {
  if (config_.item_density <= 0 || config_.item_density >= 1)
    if (config_.item_density != 0)
      throw std::invalid_argument("GridWorld: item_density must lie in [0, 1)");
  if (config_.vision_radius <= 0) throw std::invalid_argument("GridWorld: vision_radius <= 0");
  config_.world_seed = splitmix64(config.world_seed ^ splitmix64(seed));
  obs_.resize(config_.obs_size());
  reset();
}

std::uint8_t GridWorld::generate_cell(std::int64_t x, std::int64_t y) const {
  if (hash_unit(config_.world_seed, x, y, 0x67726565ULL) < config_.item_density) return 1;
  if (hash_unit(config_.world_seed, x, y, 0x72656464ULL) < config_.item_density) return 2;
  return 0;
}

GridWorld::Chunk& GridWorld::chunk_at(std::int64_t cx, std::int64_t cy) {
  auto it = chunks_.find(ChunkKey{cx, cy});
  if (it != chunks_.end()) return it->second;
  Chunk c;
  for (int ly = 0; ly < kChunkSide; ++ly)
    for (int lx = 0; lx < kChunkSide; ++lx)
      c.items[ly * kChunkSide + lx] =
          generate_cell(cx * kChunkSide + lx, cy * kChunkSide + ly);
  return chunks_.emplace(ChunkKey{cx, cy}, c).first->second;
}

int GridWorld::cell_item(std::int64_t x, std::int64_t y) {
  Chunk& c = chunk_at(floor_div(x, kChunkSide), floor_div(y, kChunkSide));
  return c.items[mod_pos(y, kChunkSide) * kChunkSide + mod_pos(x, kChunkSide)];
}

const Vector& GridWorld::reset() {
  chunks_.clear();
  agent_x_ = agent_y_ = 0;
  t_ = 0;
  green_collected_ = red_collected_ = 0;
  render(ShiftSchedule{}, 0);
  return obs_;
}

const Vector& GridWorld::step(GridAction action, const ShiftSchedule& schedule,
                              Scalar* reward_out) {
  switch (action) {
    case GridAction::Up: agent_y_ -= 1; break;
    case GridAction::Down: agent_y_ += 1; break;
    case GridAction::Left: agent_x_ -= 1; break;
    case GridAction::Right: agent_x_ += 1; break;
  }
  Scalar reward = 0;
  int item = cell_item(agent_x_, agent_y_);
  if (item != 0) {
    Scalar base = (item == 1) ? config_.green_reward : config_.red_reward;
    reward = base * reward_multiplier(t_, schedule);
    Chunk& c = chunk_at(floor_div(agent_x_, kChunkSide), floor_div(agent_y_, kChunkSide));
    c.items[mod_pos(agent_y_, kChunkSide) * kChunkSide + mod_pos(agent_x_, kChunkSide)] = 0;
    if (item == 1)
      ++green_collected_;
    else
      ++red_collected_;
  }
  render(schedule, t_);
  t_ += 1;
  if (reward_out) *reward_out = reward;
  return obs_;
}

void GridWorld::render(const ShiftSchedule& schedule, std::int64_t t) {
  const int side = config_.obs_side();
  const int r = config_.vision_radius;
  const Palette pal = base_palette();
  for (int vy = 0; vy < side; ++vy) {
    for (int vx = 0; vx < side; ++vx) {
      int item = cell_item(agent_x_ + vx - r, agent_y_ + vy - r);
      const Scalar* col = item == 0 ? pal.background : (item == 1 ? pal.green : pal.red);
      Scalar* px = obs_.data() + (vy * side + vx) * 3;
      px[0] = col[0];
      px[1] = col[1];
      px[2] = col[2];
    }
  }
  transform_observation(obs_, side, schedule, t);
}

}  // namespace relab
