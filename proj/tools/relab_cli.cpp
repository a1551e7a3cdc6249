#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "relab/harness/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"non-stationary RL laboratory"};
  app.require_subcommand(1);

  // run
  std::string run_target, out_dir;
  std::vector<std::uint64_t> seed_list;
  int n_seeds = -1;
  auto* run_cmd = app.add_subcommand("run", "execute a preset or config file");
  run_cmd->add_option("target", run_target, "preset name or config path")->required();
  run_cmd->add_option("--seed", seed_list, "explicit seed(s), overrides the config list");
  run_cmd->add_option("--seeds", n_seeds, "run seeds 0..N-1");
  run_cmd->add_option("--out", out_dir, "output root directory override");

  // compare
  std::string dir_a, dir_b;
  std::int64_t shift_step = 0;
  int bin_size = 1000, stride = 10;
  auto* cmp_cmd = app.add_subcommand("compare", "post-shift rank-sum comparison of two run dirs");
  cmp_cmd->add_option("dir_a", dir_a)->required();
  cmp_cmd->add_option("dir_b", dir_b)->required();
  cmp_cmd->add_option("--shift-step", shift_step, "first shift step")->required();
  cmp_cmd->add_option("--bin", bin_size, "bin size in steps");
  cmp_cmd->add_option("--stride", stride, "keep every stride-th post-shift bin");

  // aggregate
  std::string agg_dir;
  auto* agg_cmd = app.add_subcommand("aggregate", "write per-bin quartiles for a run dir");
  agg_cmd->add_option("dir", agg_dir)->required();
  agg_cmd->add_option("--bin", bin_size, "bin size in steps");

  auto* presets_cmd = app.add_subcommand("presets", "list shipped presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      relab::ExperimentConfig cfg = relab::load_preset(run_target);
      std::vector<std::uint64_t> seeds = cfg.seeds;
      if (!seed_list.empty()) seeds = seed_list;
      else if (n_seeds > 0) {
        seeds.clear();
        for (int i = 0; i < n_seeds; ++i) seeds.push_back(i);
      }
      for (std::uint64_t s : seeds) {
        relab::RunResult res = relab::run_experiment(cfg, s, out_dir);
        if (res.aborted) {
          std::fprintf(stderr, "seed %llu ABORTED: %s (partial log: %s)\n",
                       static_cast<unsigned long long>(s), res.abort_reason.c_str(),
                       res.csv_path.c_str());
          return 2;
        }
        double mean = 0;
        for (double r : res.ext_rewards) mean += r;
        if (!res.ext_rewards.empty()) mean /= res.ext_rewards.size();
        std::printf("seed %llu: %zu steps, mean reward/step %.5f",
                    static_cast<unsigned long long>(s), res.ext_rewards.size(), mean);
        if (cfg.environment == relab::EnvKind::Grid)
          std::printf(", green %lld red %lld", static_cast<long long>(res.green_collected),
                      static_cast<long long>(res.red_collected));
        std::printf(" -> %s\n", res.csv_path.c_str());
        std::fflush(stdout);
      }
    } else if (*cmp_cmd) {
      relab::CompareReport rep = relab::compare_dirs(dir_a, dir_b, shift_step, bin_size, stride);
      std::printf("seeds: %d vs %d\n", rep.seeds_a, rep.seeds_b);
      std::printf("post-shift mean (binned): %.6f vs %.6f\n", rep.post_shift_mean_a,
                  rep.post_shift_mean_b);
      std::printf("rank-sum W=%.1f  p=%.6g  (%s)\n", rep.test.statistic, rep.test.p_value,
                  rep.test.exact ? "exact" : "normal approximation");
    } else if (*agg_cmd) {
      relab::AggregateCurve curve = relab::write_aggregate(agg_dir, bin_size);
      std::printf("wrote %zu bins to %s/aggregate.csv\n", curve.median.size(), agg_dir.c_str());
    } else if (*presets_cmd) {
      for (const auto& p : relab::list_presets())
        std::printf("%-32s %s\n", p.name.c_str(), p.description.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
