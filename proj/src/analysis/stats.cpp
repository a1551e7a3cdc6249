#include "relab/analysis/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace relab {

std::vector<Scalar> bin_average(const std::vector<Scalar>& values, int bin_size) {
  if (bin_size <= 0) throw std::invalid_argument("bin_average: bin size must be positive");
  const int bins = static_cast<int>(values.size()) / bin_size;
  std::vector<Scalar> out(bins);
  for (int b = 0; b < bins; ++b) {
    Scalar sum = 0;
    for (int i = b * bin_size; i < (b + 1) * bin_size; ++i) sum += values[i];
    out[b] = sum / bin_size;
  }
  return out;
}

namespace {

Scalar interpolated_quantile(const std::vector<Scalar>& sorted, Scalar q) {
  const auto n = static_cast<int>(sorted.size());
  if (n == 1) return sorted[0];
  Scalar pos = q * (n - 1);
  int lo = static_cast<int>(std::floor(pos));
  int hi = std::min(lo + 1, n - 1);
  Scalar frac = pos - lo;
  return sorted[lo] * (1 - frac) + sorted[hi] * frac;
}

}  // namespace

Quartiles iqr(std::vector<Scalar> values) {
  if (values.empty()) throw std::invalid_argument("iqr: empty sample");
  std::sort(values.begin(), values.end());
  return {interpolated_quantile(values, 0.25), interpolated_quantile(values, 0.5),
          interpolated_quantile(values, 0.75)};
}

std::vector<Scalar> ema(const std::vector<Scalar>& values, Scalar kappa) {
  if (kappa < 0 || kappa >= 1) throw std::invalid_argument("ema: kappa must lie in [0,1)");
  std::vector<Scalar> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    out[i] = i == 0 ? values[0] : kappa * out[i - 1] + (1 - kappa) * values[i];
  return out;
}

namespace {

std::vector<Scalar> midranks(const std::vector<Scalar>& pooled_sorted) {
  const int n = static_cast<int>(pooled_sorted.size());
  std::vector<Scalar> ranks(n);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && pooled_sorted[j + 1] == pooled_sorted[i]) ++j;
    Scalar r = (static_cast<Scalar>(i + 1) + static_cast<Scalar>(j + 1)) / 2;
    for (int k = i; k <= j; ++k) ranks[k] = r;
    i = j + 1;
  }
  return ranks;
}

Scalar normal_sf(Scalar z) { return 0.5 * std::erfc(z / std::sqrt(Scalar(2))); }

// Enumerates every n-subset of the pooled ranks and counts statistics at
// least as extreme (in |W - mu|) as the observed one.
Scalar exact_two_sided_p(const std::vector<Scalar>& ranks, int n, Scalar w_obs) {
  const int N = static_cast<int>(ranks.size());
  const Scalar mu = static_cast<Scalar>(n) * (N + 1) / 2;
  const Scalar dev = std::abs(w_obs - mu) - 1e-12;
  std::int64_t extreme = 0, total = 0;
  std::vector<int> pick(n);
  for (int i = 0; i < n; ++i) pick[i] = i;
  while (true) {
    Scalar w = 0;
    for (int i = 0; i < n; ++i) w += ranks[pick[i]];
    ++total;
    if (std::abs(w - mu) >= dev) ++extreme;
    int k = n - 1;
    while (k >= 0 && pick[k] == N - n + k) --k;
    if (k < 0) break;
    ++pick[k];
    for (int j = k + 1; j < n; ++j) pick[j] = pick[j - 1] + 1;
  }
  return static_cast<Scalar>(extreme) / static_cast<Scalar>(total);
}

}  // namespace

WilcoxonResult wilcoxon_rank_sum(const std::vector<Scalar>& a, const std::vector<Scalar>& b) {
  const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
  if (n == 0 || m == 0) throw std::invalid_argument("wilcoxon_rank_sum: empty sample");
  const int N = n + m;

  std::vector<std::pair<Scalar, int>> pooled;  // (value, 0 for a / 1 for b)
  pooled.reserve(N);
  for (Scalar v : a) pooled.emplace_back(v, 0);
  for (Scalar v : b) pooled.emplace_back(v, 1);
  std::stable_sort(pooled.begin(), pooled.end(),
                   [](const auto& x, const auto& y) { return x.first < y.first; });

  std::vector<Scalar> values(N);
  for (int i = 0; i < N; ++i) values[i] = pooled[i].first;
  std::vector<Scalar> ranks = midranks(values);

  Scalar w = 0;
  for (int i = 0; i < N; ++i)
    if (pooled[i].second == 0) w += ranks[i];

  WilcoxonResult res;
  res.statistic = w;

  if (std::min(n, m) <= 8 && N <= 16) {
    res.exact = true;
    res.p_value = exact_two_sided_p(ranks, n, w);
    return res;
  }

  // tie correction over group sizes
  std::map<Scalar, int> tie_counts;
  for (Scalar v : values) ++tie_counts[v];
  Scalar tie_term = 0;
  for (const auto& [v, t] : tie_counts) tie_term += static_cast<Scalar>(t) * t * t - t;

  const Scalar mu = static_cast<Scalar>(n) * (N + 1) / 2;
  const Scalar var = static_cast<Scalar>(n) * m / 12.0 *
                     ((N + 1) - tie_term / (static_cast<Scalar>(N) * (N - 1)));
  if (var <= 0) {
    res.p_value = 1;
    return res;
  }
  Scalar diff = w - mu;
  Scalar cc = diff > 0 ? -0.5 : (diff < 0 ? 0.5 : 0);  // continuity, toward the mean
  Scalar z = (diff + cc) / std::sqrt(var);
  res.p_value = std::min(Scalar(1), 2 * normal_sf(std::abs(z)));
  return res;
}

WilcoxonResult significance_protocol(const std::vector<std::vector<Scalar>>& runs_a,
                                     const std::vector<std::vector<Scalar>>& runs_b,
                                     std::int64_t shift_step, int bin_size, int stride) {
  if (stride <= 0) throw std::invalid_argument("significance_protocol: stride must be positive");
  auto pool = [&](const std::vector<std::vector<Scalar>>& runs) {
    std::vector<Scalar> out;
    for (const auto& run : runs) {
      std::vector<Scalar> binned = bin_average(run, bin_size);
      int first = static_cast<int>((shift_step + bin_size - 1) / bin_size);
      for (int i = first; i < static_cast<int>(binned.size()); i += stride)
        out.push_back(binned[i]);
    }
    return out;
  };
  return wilcoxon_rank_sum(pool(runs_a), pool(runs_b));
}

std::vector<Changepoint> detect_changepoints(const std::vector<Scalar>& binned,
                                             const ChangepointConfig& config) {
  if (config.window < 2)
    throw std::invalid_argument("detect_changepoints: window must be at least 2");
  std::vector<Changepoint> out;
  const int n = static_cast<int>(binned.size());
  int t = config.window;
  while (t < n) {
    Scalar mean = 0;
    for (int i = t - config.window; i < t; ++i) mean += binned[i];
    mean /= config.window;
    Scalar var = 0;
    for (int i = t - config.window; i < t; ++i) var += (binned[i] - mean) * (binned[i] - mean);
    var /= config.window;
    Scalar sd = std::max(std::sqrt(var), Scalar(1e-12));
    Scalar z = (binned[t] - mean) / sd;
    if (std::abs(z) >= config.threshold) {
      out.push_back({t, z});
      t += std::max(config.refractory, 1);
    } else {
      ++t;
    }
  }
  return out;
}

AggregateCurve aggregate_quartiles(const std::vector<std::vector<Scalar>>& binned_runs) {
  if (binned_runs.empty()) throw std::invalid_argument("aggregate_quartiles: no runs");
  std::size_t len = binned_runs[0].size();
  for (const auto& r : binned_runs) len = std::min(len, r.size());
  AggregateCurve out;
  out.median.resize(len);
  out.q1.resize(len);
  out.q3.resize(len);
  for (std::size_t i = 0; i < len; ++i) {
    std::vector<Scalar> col;
    col.reserve(binned_runs.size());
    for (const auto& r : binned_runs) col.push_back(r[i]);
    Quartiles q = iqr(std::move(col));
    out.q1[i] = q.q1;
    out.median[i] = q.median;
    out.q3[i] = q.q3;
  }
  return out;
}

}  // namespace relab
