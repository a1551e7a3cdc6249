#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relab/agents/dqn.hpp"
#include "relab/agents/ppo.hpp"
#include "relab/env/cartpole.hpp"
#include "relab/env/grid.hpp"
#include "relab/explore/curiosity.hpp"

namespace relab {

enum class EnvKind { Grid, CartPole };
enum class AgentKind { Ppo, Dqn };

/// One fully specified experiment: environment + shifts + agent + exploration
/// variant + execution plan. Defaults reproduce the standard hyperparameter
/// tables.
struct ExperimentConfig {
  std::string name = "run";
  std::string description;

  EnvKind environment = EnvKind::Grid;
  GridConfig grid;
  CartPoleParams cartpole;
  ShiftSchedule shifts;

  AgentKind agent = AgentKind::Ppo;
  PpoHyperparams ppo;
  DqnHyperparams dqn;
  ExplorationConfig exploration;

  std::int64_t total_steps = 2000000;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::string output_dir = "runs";

  int action_count() const { return environment == EnvKind::Grid ? kGridActionCount : kCartActionCount; }
  int obs_size() const { return environment == EnvKind::Grid ? grid.obs_size() : kCartObsSize; }
  std::vector<int> obs_shape() const;

  void validate() const;  // throws std::invalid_argument naming key and constraint
};

/// Parses sectioned key=value text ([experiment], [shifts], [grid], [ppo],
/// [dqn], [exploration]); unknown keys or constraint violations throw with
/// the offending key named. Missing keys keep table defaults.
ExperimentConfig parse_config(const std::string& text);

ExperimentConfig load_config_file(const std::string& path);

/// Resolves `name` as a preset in the shipped preset directory (name or
/// name.ini), falling back to a filesystem path.
ExperimentConfig load_preset(const std::string& name);

std::string preset_directory();

struct PresetInfo {
  std::string name;
  std::string description;
};

/// All shipped presets, sorted by name.
std::vector<PresetInfo> list_presets();

}  // namespace relab
