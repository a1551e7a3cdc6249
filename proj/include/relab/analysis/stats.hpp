#pragma once

#include <cstdint>
#include <vector>

#include "relab/types.hpp"

namespace relab {

/// Means of consecutive non-overlapping bins; a trailing partial bin is
/// dropped.
std::vector<Scalar> bin_average(const std::vector<Scalar>& values, int bin_size);

struct Quartiles {
  Scalar q1 = 0, median = 0, q3 = 0;
};

/// Inclusive (linear interpolation) quartiles of the given sample.
Quartiles iqr(std::vector<Scalar> values);

/// Exponential moving average s_t = kappa*s_{t-1} + (1-kappa)*x_t with
/// s_0 = x_0.
std::vector<Scalar> ema(const std::vector<Scalar>& values, Scalar kappa = 0.9);

struct WilcoxonResult {
  Scalar statistic = 0;  // rank sum of the first sample
  Scalar p_value = 1;    // two-sided
  bool exact = false;
};

/// Two-sided Wilcoxon rank-sum test with midranks for ties. Exact null
/// enumeration when min(n,m) <= 8 and n+m <= 16; otherwise the normal
/// approximation with tie and continuity corrections.
WilcoxonResult wilcoxon_rank_sum(const std::vector<Scalar>& a, const std::vector<Scalar>& b);

/// Post-shift comparison protocol: bin both runs, keep bins starting at or
/// after the shift, thin to every `stride`-th bin per seed, pool across
/// seeds, then rank-sum test.
WilcoxonResult significance_protocol(const std::vector<std::vector<Scalar>>& runs_a,
                                     const std::vector<std::vector<Scalar>>& runs_b,
                                     std::int64_t shift_step, int bin_size = 1000,
                                     int stride = 10);

struct Changepoint {
  int bin = 0;      // index into the binned trace
  Scalar z = 0;     // trailing z-score that fired
};

struct ChangepointConfig {
  int window = 20;       // trailing bins forming the reference distribution
  Scalar threshold = 6;  // |z| that triggers a detection
  int refractory = 20;   // bins to skip after a detection
};

/// Flags bins whose value deviates from the trailing window mean by more
/// than `threshold` standard deviations.
std::vector<Changepoint> detect_changepoints(const std::vector<Scalar>& binned,
                                             const ChangepointConfig& config = {});

struct AggregateCurve {
  std::vector<Scalar> median, q1, q3;  // per bin, across seeds
};

/// Per-bin quartiles across seeds; all runs are truncated to the shortest.
AggregateCurve aggregate_quartiles(const std::vector<std::vector<Scalar>>& binned_runs);

}  // namespace relab
