#include "relab/harness/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "relab/agents/gae.hpp"
#include "relab/net/architectures.hpp"
#include "relab/rng.hpp"

namespace relab {

const char* kRunLogHeader = "step,r_ext,r_mix,r_obs,r_rew,fwd_loss,inv_loss,rm_loss,epsilon";

namespace {

std::uint64_t component_seed(std::uint64_t master, Stream stream) {
  return splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(stream)));
}

class RunLogWriter {
 public:
  RunLogWriter(const std::string& path) : f_(std::fopen(path.c_str(), "w")) {
    if (!f_) throw std::runtime_error("cannot open run log for writing: " + path);
    std::fprintf(f_, "%s\n", kRunLogHeader);
  }
  ~RunLogWriter() {
    if (f_) std::fclose(f_);
  }
  void row(std::int64_t step, Scalar r_ext, Scalar r_mix, Scalar r_obs, Scalar r_rew,
           Scalar fwd_loss, Scalar inv_loss, Scalar rm_loss, Scalar epsilon) {
    std::fprintf(f_, "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                 static_cast<long long>(step), r_ext, r_mix, r_obs, r_rew, fwd_loss, inv_loss,
                 rm_loss, epsilon);
    if (step % 1000 == 999) std::fflush(f_);
  }

 private:
  std::FILE* f_;
};

struct EnvAdapter {
  ExperimentConfig cfg;
  std::unique_ptr<GridWorld> grid;
  std::unique_ptr<CartPoleEnv> cart;

  EnvAdapter(const ExperimentConfig& c, std::uint64_t seed) : cfg(c) {
    if (c.environment == EnvKind::Grid)
      grid = std::make_unique<GridWorld>(c.grid, component_seed(seed, Stream::WorldGen));
    else
      cart = std::make_unique<CartPoleEnv>(c.cartpole, component_seed(seed, Stream::WorldGen));
  }
  const Vector& reset() { return grid ? grid->reset() : cart->reset(); }
  const Vector& step(int action, Scalar* reward) {
    if (grid) return grid->step(static_cast<GridAction>(action), cfg.shifts, reward);
    return cart->step(static_cast<CartAction>(action), cfg.shifts, reward);
  }
};

bool ppo_state_finite(const ActorCritic& ac) {
  return ac.trunk.parameters_finite() && ac.pi_head.parameters_finite() &&
         ac.v_head.parameters_finite();
}

RunResult run_ppo(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& csv_path) {
  RunResult res;
  res.csv_path = csv_path;
  const PpoHyperparams& hp = cfg.ppo;
  const int A = cfg.action_count();
  const int obs_size = cfg.obs_size();

  std::vector<LayerSpec> trunk = cfg.environment == EnvKind::Grid
                                     ? grid_feature_extractor()
                                     : mlp_trunk(obs_size);
  const int feat = cfg.environment == EnvKind::Grid ? kLatentDim : 64;
  ActorCritic ac(trunk, cfg.obs_shape(), feat, A, component_seed(seed, Stream::PolicyInit));
  ExplorationStack stack(cfg.exploration, cfg.obs_shape(), A,
                         component_seed(seed, Stream::ExploreInit));

  std::mt19937_64 action_rng = derive_rng(seed, Stream::ActionSampling);
  std::mt19937_64 shuffle_rng = derive_rng(seed, Stream::MinibatchShuffle);

  EnvAdapter env(cfg, seed);
  Vector obs = env.reset();

  RolloutBuffer rollout(hp.rollout_steps, obs_size);
  Matrix next_obs_mat(hp.rollout_steps, obs_size);
  Vector rollout_ext(hp.rollout_steps);
  Scalar last_inv_loss = 0;

  RunLogWriter log(csv_path);
  res.ext_rewards.reserve(cfg.total_steps);
  res.mixed_rewards.reserve(cfg.total_steps);

  for (std::int64_t t = 0; t < cfg.total_steps; ++t) {
    if (rollout.size() == 0 && stack.active()) stack.begin_rollout(obs);

    Scalar lp = 0, value = 0;
    int a = ac.act(obs, action_rng, &lp, &value);
    Scalar r_ext = 0;
    Vector obs_next = env.step(a, &r_ext);

    StepIntrinsics si = stack.on_step(obs, a, obs_next, r_ext);
    rollout.push(obs, a, si.mixed.combined, value, lp);
    next_obs_mat.row(rollout.size() - 1) = obs_next.transpose();
    rollout_ext(rollout.size() - 1) = r_ext;

    log.row(t, r_ext, si.mixed.combined, si.r_obs, si.r_rew, si.fwd_err, last_inv_loss,
            si.rm_err, 0);
    res.ext_rewards.push_back(r_ext);
    res.mixed_rewards.push_back(si.mixed.combined);

    if (rollout.full()) {
      Scalar bootstrap = ac.value_of(obs_next);
      GaeResult gae = compute_gae(rollout.rewards(), rollout.values(), bootstrap, hp.gamma,
                                  hp.gae_lambda);
      ppo_update(ac, rollout, gae.advantages, gae.returns, hp, shuffle_rng);
      if (stack.active()) {
        for (int pass = 0; pass < stack.config().model_epochs; ++pass) {
          ExplorationLosses losses = stack.update(rollout.observations(), rollout.actions(),
                                                  next_obs_mat, rollout_ext, hp.minibatch_size,
                                                  shuffle_rng);
          if (losses.any) last_inv_loss = losses.inverse_loss;
        }
      }
      rollout.clear();
      ++res.policy_updates;
      if (!ppo_state_finite(ac)) {
        res.aborted = true;
        res.abort_reason = "non-finite policy parameters after update at step " +
                           std::to_string(t);
        break;
      }
    }
    obs = std::move(obs_next);
  }

  if (cfg.environment == EnvKind::Grid) {
    res.green_collected = env.grid->green_collected();
    res.red_collected = env.grid->red_collected();
  }
  return res;
}

RunResult run_dqn(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& csv_path) {
  RunResult res;
  res.csv_path = csv_path;
  const int A = cfg.action_count();
  const int obs_size = cfg.obs_size();

  std::vector<LayerSpec> q_specs = cfg.environment == EnvKind::Grid
                                       ? grid_feature_extractor()
                                       : mlp_trunk(obs_size);
  const int feat = cfg.environment == EnvKind::Grid ? kLatentDim : 64;
  q_specs.push_back(LayerSpec::linear(feat, A));

  DqnHyperparams hp = cfg.dqn;
  hp.epsilon.horizon = cfg.total_steps;
  DqnAgent agent(q_specs, cfg.obs_shape(), hp, component_seed(seed, Stream::PolicyInit));
  ExplorationStack stack(cfg.exploration, cfg.obs_shape(), A,
                         component_seed(seed, Stream::ExploreInit));

  std::mt19937_64 action_rng = derive_rng(seed, Stream::ActionSampling);
  std::mt19937_64 shuffle_rng = derive_rng(seed, Stream::MinibatchShuffle);

  EnvAdapter env(cfg, seed);
  ObsFrame cur = std::make_shared<const Vector>(env.reset());
  if (stack.active()) stack.begin_rollout(*cur);

  ReplayBuffer buffer(hp.buffer_capacity, hp.prioritized, hp.per_alpha);
  RunLogWriter log(csv_path);
  res.ext_rewards.reserve(cfg.total_steps);
  res.mixed_rewards.reserve(cfg.total_steps);
  Scalar last_inv_loss = 0;

  auto reward_of = [&](ReplayBuffer& buf, const std::vector<int>& idx) {
    Vector mixed = stack.mixed_batch_rewards(buf, idx);
    if (stack.active()) {
      const int m = static_cast<int>(idx.size());
      Matrix o_t(m, obs_size), o_n(m, obs_size);
      Vector r(m);
      std::vector<int> act(m);
      for (int i = 0; i < m; ++i) {
        const Transition& tr = buf.at(idx[i]);
        o_t.row(i) = tr.obs->transpose();
        o_n.row(i) = tr.next_obs->transpose();
        r(i) = tr.reward;
        act[i] = tr.action;
      }
      ExplorationLosses losses = stack.update(o_t, act, o_n, r, m, shuffle_rng);
      if (losses.any) last_inv_loss = losses.inverse_loss;
    }
    return mixed;
  };

  for (std::int64_t t = 0; t < cfg.total_steps; ++t) {
    int a = agent.act(*cur, t, action_rng);
    Scalar r_ext = 0;
    Vector stepped = env.step(a, &r_ext);
    ObsFrame next = std::make_shared<const Vector>(std::move(stepped));
    buffer.push(cur, a, r_ext, next);

    StepIntrinsics si = stack.on_step(*cur, a, *next, r_ext);
    log.row(t, r_ext, si.mixed.combined, si.r_obs, si.r_rew, si.fwd_err, last_inv_loss,
            si.rm_err, agent.current_epsilon(t));
    res.ext_rewards.push_back(r_ext);
    res.mixed_rewards.push_back(si.mixed.combined);

    agent.maybe_update(buffer, t, shuffle_rng, reward_of);
    if (t % 1000 == 999 && !agent.qnet.parameters_finite()) {
      res.aborted = true;
      res.abort_reason = "non-finite Q-network parameters at step " + std::to_string(t);
      break;
    }
    cur = std::move(next);
  }

  if (cfg.environment == EnvKind::Grid) {
    res.green_collected = env.grid->green_collected();
    res.red_collected = env.grid->red_collected();
  }
  return res;
}

}  // namespace

std::string run_directory(const ExperimentConfig& cfg, const std::string& override_root) {
  std::string root = override_root;
  if (root.empty()) {
    const char* env = std::getenv("RELAB_OUT");
    if (env && *env) root = env;
  }
  if (root.empty()) root = cfg.output_dir;
  return (std::filesystem::path(root) / cfg.name).string();
}

RunResult run_experiment(const ExperimentConfig& cfg, std::uint64_t seed,
                         const std::string& output_root_override) {
  cfg.validate();
  std::string dir = run_directory(cfg, output_root_override);
  std::filesystem::create_directories(dir);
  std::string csv_path =
      (std::filesystem::path(dir) / ("seed_" + std::to_string(seed) + ".csv")).string();
  if (cfg.agent == AgentKind::Ppo) return run_ppo(cfg, seed, csv_path);
  return run_dqn(cfg, seed, csv_path);
}

const std::vector<Scalar>& RunLogData::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return values[i];
  throw std::invalid_argument("run log schema: missing column '" + name + "'");
}

RunLogData read_runlog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open run log: " + path);
  RunLogData data;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty run log: " + path);
  std::stringstream header(line);
  std::string col;
  bool first = true;
  while (std::getline(header, col, ',')) {
    if (first) {
      if (col != "step")
        throw std::invalid_argument("run log schema: first column must be 'step' in " + path);
      first = false;
    } else {
      data.columns.push_back(col);
      data.values.emplace_back();
    }
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const char* p = line.c_str();
    char* end = nullptr;
    data.steps.push_back(std::strtoll(p, &end, 10));
    for (std::size_t c = 0; c < data.columns.size(); ++c) {
      if (*end != ',')
        throw std::invalid_argument("run log schema: short row in " + path);
      p = end + 1;
      data.values[c].push_back(std::strtod(p, &end));
    }
  }
  return data;
}

std::vector<std::vector<Scalar>> load_column_per_seed(const std::string& dir,
                                                      const std::string& column) {
  namespace fs = std::filesystem;
  std::vector<std::string> files;
  if (fs::exists(dir))
    for (const auto& e : fs::directory_iterator(dir)) {
      std::string name = e.path().filename().string();
      if (name.rfind("seed_", 0) == 0 && e.path().extension() == ".csv")
        files.push_back(e.path().string());
    }
  if (files.empty()) throw std::invalid_argument("no seed_*.csv run logs in: " + dir);
  std::sort(files.begin(), files.end());
  std::vector<std::vector<Scalar>> out;
  for (const auto& f : files) out.push_back(read_runlog(f).column(column));
  return out;
}

CompareReport compare_dirs(const std::string& dir_a, const std::string& dir_b,
                           std::int64_t shift_step, int bin_size, int stride) {
  auto runs_a = load_column_per_seed(dir_a, "r_ext");
  auto runs_b = load_column_per_seed(dir_b, "r_ext");
  CompareReport report;
  report.seeds_a = static_cast<int>(runs_a.size());
  report.seeds_b = static_cast<int>(runs_b.size());
  report.test = significance_protocol(runs_a, runs_b, shift_step, bin_size, stride);

  auto post_shift_mean = [&](const std::vector<std::vector<Scalar>>& runs) {
    Scalar sum = 0;
    std::int64_t n = 0;
    int first = static_cast<int>((shift_step + bin_size - 1) / bin_size);
    for (const auto& run : runs) {
      std::vector<Scalar> binned = bin_average(run, bin_size);
      for (int i = first; i < static_cast<int>(binned.size()); ++i) {
        sum += binned[i];
        ++n;
      }
    }
    return n ? sum / n : Scalar(0);
  };
  report.post_shift_mean_a = post_shift_mean(runs_a);
  report.post_shift_mean_b = post_shift_mean(runs_b);
  return report;
}

AggregateCurve write_aggregate(const std::string& dir, int bin_size) {
  auto runs = load_column_per_seed(dir, "r_ext");
  std::vector<std::vector<Scalar>> binned;
  for (const auto& r : runs) binned.push_back(bin_average(r, bin_size));
  AggregateCurve curve = aggregate_quartiles(binned);

  std::string path = (std::filesystem::path(dir) / "aggregate.csv").string();
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write: " + path);
  std::fprintf(f, "bin,q25,median,q75\n");
  for (std::size_t i = 0; i < curve.median.size(); ++i)
    std::fprintf(f, "%zu,%.17g,%.17g,%.17g\n", i, curve.q1[i], curve.median[i], curve.q3[i]);
  std::fclose(f);
  return curve;
}

}  // namespace relab
