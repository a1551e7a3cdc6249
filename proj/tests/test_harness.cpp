#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "relab/harness/config.hpp"
#include "relab/harness/runner.hpp"

using namespace relab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("relab_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static inline int counter = 0;
};

ExperimentConfig tiny_ppo_config(const std::string& name) {
  ExperimentConfig cfg = parse_config(
      "[experiment]\n"
      "name = " + name + "\n"
      "environment = grid\n"
      "agent = ppo\n"
      "total_steps = 4096\n"
      "seeds = 0\n");
  cfg.ppo.rollout_steps = 2048;
  return cfg;
}

}  // namespace

TEST_CASE("empty agent sections keep the documented defaults") {
  ExperimentConfig cfg = parse_config("[experiment]\nname = d\n");
  CHECK(cfg.ppo.learning_rate == 3e-4);
  CHECK(cfg.ppo.rollout_steps == 2048);
  CHECK(cfg.ppo.minibatch_size == 64);
  CHECK(cfg.ppo.epochs == 10);
  CHECK(cfg.ppo.gamma == 0.99);
  CHECK(cfg.ppo.gae_lambda == 0.95);
  CHECK(cfg.ppo.clip_range == 0.2);
  CHECK(cfg.ppo.value_coef == 0.5);
  CHECK(cfg.ppo.entropy_coef == 0.0);
  CHECK(cfg.ppo.max_grad_norm == 0.5);
  CHECK(cfg.dqn.learning_rate == 1e-4);
  CHECK(cfg.dqn.buffer_capacity == 1000000);
  CHECK(cfg.dqn.learning_starts == 50000);
  CHECK(cfg.dqn.batch_size == 32);
  CHECK(cfg.dqn.tau == 1.0);
  CHECK(cfg.dqn.update_frequency == 4);
  CHECK(cfg.dqn.target_update_interval == 10000);
  CHECK(cfg.dqn.max_grad_norm == 10.0);
  CHECK(cfg.total_steps == 2000000);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{0, 1, 2, 3, 4});
  CHECK(cfg.exploration.variant == ExploreVariant::None);
}

TEST_CASE("over-unity mixing weights are rejected naming the constraint") {
  std::string text =
      "[experiment]\nname = bad\n[exploration]\nvariant = icm\nalpha = 0.7\nbeta = 0.5\n";
  CHECK_THROWS_WITH_AS(parse_config(text), doctest::Contains("alpha"), std::invalid_argument);
}

TEST_CASE("unknown keys and sections are rejected by name") {
  CHECK_THROWS_WITH_AS(parse_config("[experiment]\nbogus_key = 1\n"),
                       doctest::Contains("bogus_key"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config("[nonsense]\nx = 1\n"), doctest::Contains("nonsense"),
                       std::invalid_argument);
}

TEST_CASE("numeric values accept scientific notation") {
  ExperimentConfig cfg = parse_config(
      "[experiment]\nname = s\ntotal_steps = 5e3\n[shifts]\ncomponents = reward-abrupt:1e5\n");
  CHECK(cfg.total_steps == 5000);
  REQUIRE(cfg.shifts.components.size() == 1);
  CHECK(cfg.shifts.components[0].interval == 100000);
}

TEST_CASE("the color-swap preset loads with the expected settings") {
  ExperimentConfig cfg = load_preset("fig4-color-swap");
  CHECK(cfg.environment == EnvKind::Grid);
  CHECK(cfg.agent == AgentKind::Ppo);
  REQUIRE(cfg.shifts.components.size() == 1);
  CHECK(cfg.shifts.components[0].kind == ShiftKind::ColorSwap);
  CHECK(cfg.shifts.components[0].interval == 500000);
  CHECK(cfg.exploration.variant == ExploreVariant::Icm);
  CHECK(cfg.exploration.weights.alpha == 0.85);
  CHECK(cfg.exploration.weights.beta == 0.0);
  CHECK_THROWS_AS(load_preset("no-such-preset"), std::invalid_argument);
}

TEST_CASE("the preset registry ships at least twenty entries") {
  auto presets = list_presets();
  CHECK(presets.size() >= 20);
  auto has = [&](const std::string& n) {
    for (const auto& p : presets)
      if (p.name == n) return true;
    return false;
  };
  CHECK(has("fig3-abrupt-1e6"));
  CHECK(has("fig5-dqn-informed-5e3"));
  CHECK(has("fig12-cartpole-break-icm"));
  CHECK(has("jb-base-ppo"));
  for (size_t i = 1; i < presets.size(); ++i) CHECK(presets[i - 1].name < presets[i].name);
}

TEST_CASE("rollout-scoped bonuses cannot be paired with an off-policy agent") {
  std::string text =
      "[experiment]\nname = b\nagent = dqn\n[exploration]\nvariant = ride\nalpha = 0.85\n";
  CHECK_THROWS_WITH_AS(parse_config(text), doctest::Contains("variant"), std::invalid_argument);
}

TEST_CASE("a short run performs one policy update per full rollout") {
  TempDir tmp;
  ExperimentConfig cfg = tiny_ppo_config("short");
  RunResult res = run_experiment(cfg, 0, tmp.path.string());
  CHECK_FALSE(res.aborted);
  CHECK(res.policy_updates == 2);  // 4096 steps / 2048-step rollouts
  CHECK(res.ext_rewards.size() == 4096);
  CHECK(fs::exists(res.csv_path));
}

TEST_CASE("identical config and seed produce byte-identical run logs") {
  TempDir t1, t2;
  ExperimentConfig cfg = tiny_ppo_config("det");
  cfg.exploration.variant = ExploreVariant::Icm;
  cfg.exploration.weights = IntrinsicWeights(0.15, 0.15);
  RunResult r1 = run_experiment(cfg, 3, t1.path.string());
  RunResult r2 = run_experiment(cfg, 3, t2.path.string());
  CHECK(slurp(r1.csv_path) == slurp(r2.csv_path));
  // a different seed diverges
  RunResult r3 = run_experiment(cfg, 4, t2.path.string());
  CHECK(slurp(r1.csv_path) != slurp(r3.csv_path));
}

TEST_CASE("run logs parse back with the fixed schema") {
  TempDir tmp;
  ExperimentConfig cfg = tiny_ppo_config("schema");
  RunResult res = run_experiment(cfg, 1, tmp.path.string());
  RunLogData log = read_runlog(res.csv_path);
  REQUIRE(log.steps.size() == 4096);
  for (size_t i = 1; i < log.steps.size(); ++i) CHECK(log.steps[i] == log.steps[i - 1] + 1);
  for (const char* col : {"r_ext", "r_mix", "r_obs", "r_rew", "fwd_loss", "inv_loss", "rm_loss",
                          "epsilon"})
    CHECK(log.column(col).size() == 4096);
  CHECK_THROWS_WITH_AS(log.column("no_such"), doctest::Contains("no_such"),
                       std::invalid_argument);

  // without exploration the mixed reward equals the extrinsic reward
  const auto& ext = log.column("r_ext");
  const auto& mixd = log.column("r_mix");
  for (size_t i = 0; i < ext.size(); ++i) CHECK(mixd[i] == ext[i]);
  CHECK(slurp(res.csv_path).rfind(kRunLogHeader, 0) == 0);
}

TEST_CASE("malformed run logs are rejected") {
  TempDir tmp;
  fs::path bad = tmp.path / "seed_0.csv";
  std::ofstream(bad) << "nonsense,header\n1,2\n";
  CHECK_THROWS_WITH_AS(read_runlog(bad.string()), doctest::Contains("step"),
                       std::invalid_argument);
  fs::path shortrow = tmp.path / "seed_1.csv";
  std::ofstream(shortrow) << std::string(kRunLogHeader) << "\n0,1,2\n";
  CHECK_THROWS_WITH_AS(read_runlog(shortrow.string()), doctest::Contains("short row"),
                       std::invalid_argument);
}

TEST_CASE("comparing a directory against itself is not significant") {
  TempDir tmp;
  ExperimentConfig cfg = tiny_ppo_config("selfcmp");
  cfg.total_steps = 6144;
  run_experiment(cfg, 0, tmp.path.string());
  run_experiment(cfg, 1, tmp.path.string());
  std::string dir = run_directory(cfg, tmp.path.string());
  CompareReport rep = compare_dirs(dir, dir, 0, 1000, 1);
  CHECK(rep.test.p_value >= 0.99);
  CHECK(rep.post_shift_mean_a == rep.post_shift_mean_b);
  CHECK(rep.seeds_a == 2);

  AggregateCurve agg = write_aggregate(dir, 1000);
  CHECK(agg.median.size() == 6);
  CHECK(fs::exists(fs::path(dir) / "aggregate.csv"));
}
