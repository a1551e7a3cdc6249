#pragma once

#include <string>
#include <vector>

#include "relab/analysis/stats.hpp"
#include "relab/harness/config.hpp"

namespace relab {

struct RunResult {
  std::string csv_path;
  std::vector<Scalar> ext_rewards;   // one entry per environment step
  std::vector<Scalar> mixed_rewards;
  std::int64_t green_collected = 0, red_collected = 0;  // grid only
  int policy_updates = 0;
  bool aborted = false;
  std::string abort_reason;
};

/// Executes the collect/update loop for one seed and writes
/// <output_dir>/<name>/seed_<S>.csv incrementally. Deterministic: identical
/// (config, seed) pairs produce byte-identical CSVs.
RunResult run_experiment(const ExperimentConfig& config, std::uint64_t seed,
                         const std::string& output_root_override = "");

/// Resolves the run directory for a config (override > RELAB_OUT env var >
/// config.output_dir), including the experiment name component.
std::string run_directory(const ExperimentConfig& config, const std::string& override_root = "");

// ---- RunLog persistence ----

extern const char* kRunLogHeader;  // step,r_ext,r_mix,r_obs,r_rew,fwd_loss,inv_loss,rm_loss,epsilon

struct RunLogData {
  std::vector<std::int64_t> steps;
  std::vector<std::string> columns;             // names, order as in the file
  std::vector<std::vector<Scalar>> values;      // values[c][row]

  const std::vector<Scalar>& column(const std::string& name) const;  // throws naming the column
};

RunLogData read_runlog(const std::string& path);

/// All seed_*.csv files in a directory, sorted by filename; the named column
/// from each. Throws when the directory holds no run logs.
std::vector<std::vector<Scalar>> load_column_per_seed(const std::string& dir,
                                                      const std::string& column);

// ---- analysis entry points ----

struct CompareReport {
  WilcoxonResult test;
  Scalar post_shift_mean_a = 0, post_shift_mean_b = 0;
  int seeds_a = 0, seeds_b = 0;
};

/// Pooled post-shift rank-sum comparison of the r_ext column of two run
/// directories.
CompareReport compare_dirs(const std::string& dir_a, const std::string& dir_b,
                           std::int64_t shift_step, int bin_size = 1000, int stride = 10);

/// Writes <dir>/aggregate.csv with header "bin,q25,median,q75": per-bin
/// quartiles of the binned r_ext column across seeds. Returns the curve.
AggregateCurve write_aggregate(const std::string& dir, int bin_size = 1000);

}  // namespace relab
