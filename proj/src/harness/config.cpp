#include "relab/harness/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace relab {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_key(const std::string& section, const std::string& key,
                          const std::string& why) {
  throw std::invalid_argument("config [" + section + "] " + key + ": " + why);
}

Scalar parse_scalar(const std::string& section, const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    Scalar x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    bad_key(section, key, "not a number: '" + v + "'");
  }
}

std::int64_t parse_int(const std::string& section, const std::string& key, const std::string& v) {
  Scalar x = parse_scalar(section, key, v);  // accepts 5e3 style values
  auto i = static_cast<std::int64_t>(std::llround(x));
  if (static_cast<Scalar>(i) != x) bad_key(section, key, "not an integer: '" + v + "'");
  return i;
}

bool parse_bool(const std::string& section, const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_key(section, key, "not a boolean: '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

ShiftComponent parse_shift_component(const std::string& token) {
  // kind:interval[:payload], e.g. color-swap:500000, dynamics-abrupt:50000:break
  std::vector<std::string> parts;
  std::stringstream ss(token);
  std::string p;
  while (std::getline(ss, p, ':')) parts.push_back(p);
  if (parts.size() < 2 || parts.size() > 3)
    bad_key("shifts", "components", "expected kind:interval[:payload], got '" + token + "'");
  ShiftComponent c;
  c.kind = parse_shift_kind(parts[0]);
  c.interval = parse_int("shifts", "components", parts[1]);
  if (c.interval <= 0) bad_key("shifts", "components", "interval must be positive");
  if (parts.size() == 3) {
    if (parts[2] == "force") c.payload = DynamicsPayload::Force20To5;
    else if (parts[2] == "break") c.payload = DynamicsPayload::BreakPpo;
    else bad_key("shifts", "components", "unknown payload '" + parts[2] + "'");
  }
  return c;
}

}  // namespace

std::vector<int> ExperimentConfig::obs_shape() const {
  if (environment == EnvKind::Grid) return {grid.obs_side(), grid.obs_side(), 3};
  return {kCartObsSize};
}

void ExperimentConfig::validate() const {
  if (total_steps <= 0) bad_key("experiment", "total_steps", "must be positive");
  if (seeds.empty()) bad_key("experiment", "seeds", "must be non-empty");
  if (exploration.weights.alpha + exploration.weights.beta > 1)
    bad_key("exploration", "alpha/beta", "alpha + beta must not exceed 1");
  if (exploration.model_epochs < 1)
    bad_key("exploration", "model_epochs", "must be at least 1");
  if (exploration.variant == ExploreVariant::None &&
      (exploration.weights.alpha != 0 || exploration.weights.beta != 0))
    bad_key("exploration", "variant", "nonzero alpha/beta require a variant");
  if (agent == AgentKind::Dqn && (exploration.variant == ExploreVariant::Ride ||
                                  exploration.variant == ExploreVariant::Noveld))
    bad_key("exploration", "variant", "rollout-scoped bonuses require the on-policy agent");
  if (agent == AgentKind::Dqn && dqn.epsilon.informed) {
    bool any = false;
    for (const auto& c : shifts.components) any = any || c.interval > 0;
    if (!any) bad_key("dqn", "informed_epsilon", "requires a shift schedule with an interval");
  }
  ppo.validate();
  dqn.validate();
  if (exploration.weights.reward_error_scale <= 0)
    bad_key("exploration", "reward_error_scale", "must be positive");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::string section;
  std::istringstream is(text);
  std::string raw;
  Scalar alpha = 0, beta = 0, rr_scale = 1.0;
  bool cartpole_env = false;

  while (std::getline(is, raw)) {
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw std::invalid_argument("config: malformed section '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      static const char* known[] = {"experiment", "shifts", "grid", "ppo", "dqn", "exploration"};
      if (std::find_if(std::begin(known), std::end(known),
                       [&](const char* k) { return section == k; }) == std::end(known))
        throw std::invalid_argument("config: unknown section [" + section + "]");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value, got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (section.empty()) throw std::invalid_argument("config: key '" + key + "' outside a section");

    if (section == "experiment") {
      if (key == "name") cfg.name = val;
      else if (key == "description") cfg.description = val;
      else if (key == "environment") {
        if (val == "grid") cfg.environment = EnvKind::Grid;
        else if (val == "cartpole") { cfg.environment = EnvKind::CartPole; cartpole_env = true; }
        else bad_key(section, key, "must be grid or cartpole");
      } else if (key == "agent") {
        if (val == "ppo") cfg.agent = AgentKind::Ppo;
        else if (val == "dqn") cfg.agent = AgentKind::Dqn;
        else bad_key(section, key, "must be ppo or dqn");
      } else if (key == "total_steps") cfg.total_steps = parse_int(section, key, val);
      else if (key == "seeds") {
        cfg.seeds.clear();
        for (const auto& s : split_list(val))
          cfg.seeds.push_back(static_cast<std::uint64_t>(parse_int(section, key, s)));
      } else if (key == "output_dir") cfg.output_dir = val;
      else bad_key(section, key, "unknown key");
    } else if (section == "shifts") {
      if (key == "components") {
        cfg.shifts.components.clear();
        for (const auto& tok : split_list(val))
          cfg.shifts.components.push_back(parse_shift_component(tok));
      } else bad_key(section, key, "unknown key");
    } else if (section == "grid") {
      if (key == "vision_radius") cfg.grid.vision_radius = static_cast<int>(parse_int(section, key, val));
      else if (key == "green_reward") cfg.grid.green_reward = parse_scalar(section, key, val);
      else if (key == "red_reward") cfg.grid.red_reward = parse_scalar(section, key, val);
      else if (key == "item_density") cfg.grid.item_density = parse_scalar(section, key, val);
      else if (key == "world_seed") cfg.grid.world_seed = static_cast<std::uint64_t>(parse_int(section, key, val));
      else bad_key(section, key, "unknown key");
    } else if (section == "ppo") {
      if (key == "learning_rate") cfg.ppo.learning_rate = parse_scalar(section, key, val);
      else if (key == "rollout_steps") cfg.ppo.rollout_steps = static_cast<int>(parse_int(section, key, val));
      else if (key == "minibatch_size") cfg.ppo.minibatch_size = static_cast<int>(parse_int(section, key, val));
      else if (key == "epochs") cfg.ppo.epochs = static_cast<int>(parse_int(section, key, val));
      else if (key == "gamma") cfg.ppo.gamma = parse_scalar(section, key, val);
      else if (key == "gae_lambda") cfg.ppo.gae_lambda = parse_scalar(section, key, val);
      else if (key == "clip_range") cfg.ppo.clip_range = parse_scalar(section, key, val);
      else if (key == "value_coef") cfg.ppo.value_coef = parse_scalar(section, key, val);
      else if (key == "entropy_coef") cfg.ppo.entropy_coef = parse_scalar(section, key, val);
      else if (key == "max_grad_norm") cfg.ppo.max_grad_norm = parse_scalar(section, key, val);
      else bad_key(section, key, "unknown key");
    } else if (section == "dqn") {
      if (key == "learning_rate") cfg.dqn.learning_rate = parse_scalar(section, key, val);
      else if (key == "buffer_capacity") cfg.dqn.buffer_capacity = static_cast<int>(parse_int(section, key, val));
      else if (key == "learning_starts") cfg.dqn.learning_starts = parse_int(section, key, val);
      else if (key == "batch_size") cfg.dqn.batch_size = static_cast<int>(parse_int(section, key, val));
      else if (key == "gamma") cfg.dqn.gamma = parse_scalar(section, key, val);
      else if (key == "update_frequency") cfg.dqn.update_frequency = static_cast<int>(parse_int(section, key, val));
      else if (key == "target_update_interval") cfg.dqn.target_update_interval = parse_int(section, key, val);
      else if (key == "max_grad_norm") cfg.dqn.max_grad_norm = parse_scalar(section, key, val);
      else if (key == "epsilon_initial") cfg.dqn.epsilon.initial = parse_scalar(section, key, val);
      else if (key == "epsilon_final") cfg.dqn.epsilon.final_value = parse_scalar(section, key, val);
      else if (key == "epsilon_fraction") cfg.dqn.epsilon.fraction = parse_scalar(section, key, val);
      else if (key == "informed_epsilon") cfg.dqn.epsilon.informed = parse_bool(section, key, val);
      else if (key == "prioritized") cfg.dqn.prioritized = parse_bool(section, key, val);
      else if (key == "per_alpha") cfg.dqn.per_alpha = parse_scalar(section, key, val);
      else if (key == "stochastic_action") cfg.dqn.stochastic_action = parse_bool(section, key, val);
      else if (key == "stochastic_temperature") cfg.dqn.stochastic_temperature = parse_scalar(section, key, val);
      else if (key == "soft_q") cfg.dqn.soft_q = parse_bool(section, key, val);
      else if (key == "soft_q_temperature") cfg.dqn.soft_q_temperature = parse_scalar(section, key, val);
      else bad_key(section, key, "unknown key");
    } else if (section == "exploration") {
      if (key == "variant") cfg.exploration.variant = parse_explore_variant(val);
      else if (key == "alpha") alpha = parse_scalar(section, key, val);
      else if (key == "beta") beta = parse_scalar(section, key, val);
      else if (key == "reward_error_scale") rr_scale = parse_scalar(section, key, val);
      else if (key == "model_learning_rate") cfg.exploration.model_learning_rate = parse_scalar(section, key, val);
      else if (key == "model_epochs") cfg.exploration.model_epochs = parse_int(section, key, val);
      else bad_key(section, key, "unknown key");
    }
  }

  try {
    cfg.exploration.weights = IntrinsicWeights(alpha, beta, rr_scale);
  } catch (const std::exception& e) {
    bad_key("exploration", "alpha/beta", e.what());
  }
  if (cartpole_env && cfg.exploration.weights.beta > 0 && rr_scale == 1.0)
    cfg.exploration.weights.reward_error_scale = 0.2;

  // plumb derived schedule quantities
  cfg.dqn.epsilon.horizon = cfg.total_steps;
  if (!cfg.shifts.components.empty())
    cfg.dqn.epsilon.interval = cfg.shifts.components.front().interval;

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string preset_directory() {
#ifdef RELAB_PRESET_DIR
  return RELAB_PRESET_DIR;
#else
  return "presets";
#endif
}

ExperimentConfig load_preset(const std::string& name) {
  namespace fs = std::filesystem;
  fs::path dir(preset_directory());
  for (const auto& candidate : {dir / (name + ".ini"), dir / name, fs::path(name)})
    if (fs::exists(candidate) && fs::is_regular_file(candidate))
      return load_config_file(candidate.string());
  throw std::invalid_argument("preset or config file not found: '" + name + "'");
}

std::vector<PresetInfo> list_presets() {
  namespace fs = std::filesystem;
  std::vector<PresetInfo> out;
  fs::path dir(preset_directory());
  if (!fs::exists(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".ini") continue;
    ExperimentConfig cfg = load_config_file(entry.path().string());
    out.push_back({entry.path().stem().string(), cfg.description});
  }
  std::sort(out.begin(), out.end(),
            [](const PresetInfo& a, const PresetInfo& b) { return a.name < b.name; });
  return out;
}

}  // namespace relab
