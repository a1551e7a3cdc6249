#pragma once

#include <cstdint>
#include <unordered_map>

#include "relab/env/schedule.hpp"
#include "relab/types.hpp"

namespace relab {

enum class GridAction { Up = 0, Down = 1, Left = 2, Right = 3 };
constexpr int kGridActionCount = 4;

struct GridConfig {
  int vision_radius = 5;  // 11x11 observation
  Scalar green_reward = 1.0;
  Scalar red_reward = -1.0;
  Scalar item_density = 0.05;  // per cell and item type
  std::uint64_t world_seed = 0;

  int obs_side() const { return 2 * vision_radius + 1; }
  int obs_size() const { return obs_side() * obs_side() * 3; }
};

/// Procedurally generated unbounded gridworld. Items are placed by a
/// deterministic per-cell hash; chunks materialize lazily, collected cells
/// stay empty, fresh items appear only in newly materialized chunks.
class GridWorld {
 public:
  static constexpr int kChunkSide = 16;

  GridWorld(GridConfig config, std::uint64_t seed);

  const Vector& reset();
  /// Moves one cell, collects any item on the target cell (reward scaled by
  /// the schedule's reward multiplier), renders the transformed observation.
  const Vector& step(GridAction action, const ShiftSchedule& schedule, Scalar* reward_out);

  std::int64_t step_count() const { return t_; }
  std::int64_t green_collected() const { return green_collected_; }
  std::int64_t red_collected() const { return red_collected_; }
  const GridConfig& config() const { return config_; }
  const Vector& observation() const { return obs_; }

  /// Item code of a world cell: 0 empty, 1 green, 2 red. Pure function of
  /// (world_seed, cell) until the item is collected.
  int cell_item(std::int64_t x, std::int64_t y);

 private:
  struct ChunkKey {
    std::int64_t cx, cy;
    bool operator==(const ChunkKey&) const = default;
  };
  struct ChunkKeyHash {
    std::size_t operator()(const ChunkKey& k) const;
  };
  struct Chunk {
    std::uint8_t items[kChunkSide * kChunkSide];
  };

  Chunk& chunk_at(std::int64_t cx, std::int64_t cy);
  std::uint8_t generate_cell(std::int64_t x, std::int64_t y) const;
  void render(const ShiftSchedule& schedule, std::int64_t t);

  GridConfig config_;
  std::unordered_map<ChunkKey, Chunk, ChunkKeyHash> chunks_;
  std::int64_t agent_x_ = 0, agent_y_ = 0;
  std::int64_t t_ = 0;
  std::int64_t green_collected_ = 0, red_collected_ = 0;
  Vector obs_;
};

}  // namespace relab
