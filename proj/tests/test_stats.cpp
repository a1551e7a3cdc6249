#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "relab/analysis/stats.hpp"

using namespace relab;

namespace {

// Exact two-sided rank-sum p-value by dynamic programming over tie-free
// integer ranks: f(i, j, s) = number of j-subsets of ranks {1..i} with sum s.
// Independent of the production enumeration path.
Scalar dp_exact_p(int n, int m, Scalar w_obs) {
  const int N = n + m;
  const int max_sum = N * (N + 1) / 2;
  std::vector<std::vector<double>> f(n + 1, std::vector<double>(max_sum + 1, 0.0));
  f[0][0] = 1.0;
  for (int r = 1; r <= N; ++r)
    for (int j = std::min(r, n); j >= 1; --j)
      for (int s = max_sum; s >= r; --s) f[j][s] += f[j - 1][s - r];
  double total = 0, extreme = 0;
  const double mu = n * (N + 1) / 2.0;
  const double dev = std::abs(w_obs - mu) - 1e-12;
  for (int s = 0; s <= max_sum; ++s) {
    total += f[n][s];
    if (std::abs(s - mu) >= dev) extreme += f[n][s];
  }
  return extreme / total;
}

}  // namespace

TEST_CASE("bin averages drop the trailing partial bin") {
  std::vector<Scalar> c(3500, 2.5);
  auto bins = bin_average(c, 1000);
  REQUIRE(bins.size() == 3);
  for (Scalar b : bins) CHECK(b == 2.5);

  std::vector<Scalar> alt(2000);
  for (int i = 0; i < 2000; ++i) alt[i] = (i % 2 == 0) ? 1.0 : -1.0;
  auto ab = bin_average(alt, 1000);
  REQUIRE(ab.size() == 2);
  CHECK(ab[0] == 0.0);
  CHECK(ab[1] == 0.0);

  CHECK(bin_average(std::vector<Scalar>(1999, 1.0), 1000).size() == 1);
  CHECK(bin_average({}, 1000).empty());
  CHECK_THROWS_AS(bin_average({1.0}, 0), std::invalid_argument);
}

TEST_CASE("quartiles use inclusive linear interpolation") {
  Quartiles q = iqr({5, 1, 3, 2, 4});
  CHECK(q.q1 == 2.0);
  CHECK(q.median == 3.0);
  CHECK(q.q3 == 4.0);

  Quartiles even = iqr({1, 2, 3, 4});  // positions 0.75, 1.5, 2.25
  CHECK(even.q1 == doctest::Approx(1.75));
  CHECK(even.median == doctest::Approx(2.5));
  CHECK(even.q3 == doctest::Approx(3.25));

  Quartiles flat = iqr({7, 7, 7, 7, 7, 7});
  CHECK(flat.q1 == 7.0);
  CHECK(flat.median == 7.0);
  CHECK(flat.q3 == 7.0);

  Quartiles one = iqr({-3});
  CHECK(one.q1 == -3.0);
  CHECK(one.median == -3.0);
  CHECK(one.q3 == -3.0);

  CHECK_THROWS_AS(iqr({}), std::invalid_argument);
}

TEST_CASE("exponential moving average") {
  std::vector<Scalar> x = {1, 2, 3, 4};
  auto id = ema(x, 0.0);  // kappa = 0 reproduces the input
  for (size_t i = 0; i < x.size(); ++i) CHECK(id[i] == x[i]);

  auto flat = ema(std::vector<Scalar>(50, 3.0), 0.9);
  for (Scalar v : flat) CHECK(v == doctest::Approx(3.0));

  // step response: input jumps 0 -> 1 at t=1; s_k = 1 - 0.9^k
  std::vector<Scalar> step(21, 1.0);
  step[0] = 0.0;
  auto s = ema(step, 0.9);
  for (int k = 0; k <= 20; ++k)
    CHECK(s[k] == doctest::Approx(1.0 - std::pow(0.9, k)).epsilon(1e-12));
}

TEST_CASE("rank-sum test on fully separated tiny samples") {
  WilcoxonResult r = wilcoxon_rank_sum({1, 2, 3}, {4, 5, 6});
  CHECK(r.exact);
  CHECK(r.statistic == 6.0);
  CHECK(r.p_value == doctest::Approx(0.1).epsilon(1e-12));  // 2/C(6,3)
}

TEST_CASE("identical samples are never significant and the test is symmetric") {
  std::vector<Scalar> a = {1, 2, 3, 4, 5};
  WilcoxonResult same = wilcoxon_rank_sum(a, a);
  CHECK(same.p_value >= 0.99);

  std::mt19937_64 rng(1);
  std::normal_distribution<Scalar> d(0, 1);
  std::vector<Scalar> x(7), y(9);
  for (auto& v : x) v = d(rng);
  for (auto& v : y) v = d(rng) + 0.5;
  CHECK(wilcoxon_rank_sum(x, y).p_value ==
        doctest::Approx(wilcoxon_rank_sum(y, x).p_value).epsilon(1e-12));
}

TEST_CASE("exact p-values match an independent dynamic-programming oracle") {
  std::mt19937_64 rng(2);
  for (int n = 1; n <= 6; ++n) {
    for (int m = 1; m <= 6; ++m) {
      if (n + m > 12) continue;
      // tie-free integer data: a random permutation of 1..n+m
      std::vector<int> perm(n + m);
      for (int i = 0; i < n + m; ++i) perm[i] = i + 1;
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<Scalar> a(perm.begin(), perm.begin() + n);
      std::vector<Scalar> b(perm.begin() + n, perm.end());
      WilcoxonResult r = wilcoxon_rank_sum(a, b);
      REQUIRE(r.exact);
      CAPTURE(n);
      CAPTURE(m);
      CHECK(r.p_value == doctest::Approx(dp_exact_p(n, m, r.statistic)).epsilon(1e-9));
    }
  }
}

TEST_CASE("normal approximation tracks the exact test at the crossover size") {
  std::mt19937_64 rng(3);
  std::normal_distribution<Scalar> d(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Scalar> a(8), b(8);
    for (auto& v : a) v = d(rng);
    for (auto& v : b) v = d(rng) + 0.3;
    WilcoxonResult ex = wilcoxon_rank_sum(a, b);
    REQUIRE(ex.exact);
    // force the normal path by duplicating one sample past the exact cutoff
    std::vector<Scalar> a2 = a;
    a2.push_back(a[0] + 1e-9);
    std::vector<Scalar> b2 = b;
    b2.push_back(b[0] + 1e-9);
    WilcoxonResult ap = wilcoxon_rank_sum(a2, b2);
    CHECK_FALSE(ap.exact);
    // not the same data, so only a loose agreement check is meaningful
    CHECK(std::abs(ap.p_value - ex.p_value) < 0.25);
  }
  // direct sanity: large separated samples are extremely significant
  std::vector<Scalar> lo(30), hi(30);
  for (int i = 0; i < 30; ++i) {
    lo[i] = i;
    hi[i] = i + 100;
  }
  WilcoxonResult big = wilcoxon_rank_sum(lo, hi);
  CHECK_FALSE(big.exact);
  CHECK(big.p_value < 1e-9);
}

TEST_CASE("post-shift significance protocol") {
  std::mt19937_64 rng(4);
  std::normal_distribution<Scalar> noise(0, 0.5);
  auto make_runs = [&](Scalar level, int seeds) {
    std::vector<std::vector<Scalar>> runs;
    for (int s = 0; s < seeds; ++s) {
      std::vector<Scalar> r(100000);
      for (auto& v : r) v = level + noise(rng);
      runs.push_back(std::move(r));
    }
    return runs;
  };
  auto base = make_runs(0.0, 3);
  CHECK(significance_protocol(base, base, 50000).p_value >= 0.99);

  auto better = make_runs(10.0, 3);
  CHECK(significance_protocol(base, better, 50000).p_value < 0.01);

  CHECK_THROWS_AS(significance_protocol(base, better, 100000000), std::invalid_argument);
}

TEST_CASE("changepoint detector flags a single jump once, near the jump") {
  std::vector<Scalar> flat(200, 1.0);
  CHECK(detect_changepoints(flat).empty());

  // bounded alternating jitter keeps off-jump z-scores at exactly 1
  auto jitter = [](int i) { return (i % 2 == 0) ? 0.1 : -0.1; };
  std::vector<Scalar> trace(300);
  const int k = 150;
  for (int i = 0; i < 300; ++i) trace[i] = (i < k ? 0.0 : 5.0) + jitter(i);
  auto cps = detect_changepoints(trace);
  REQUIRE(cps.size() == 1);
  CHECK(cps[0].bin >= k);
  CHECK(cps[0].bin <= k + 2);
  CHECK(std::abs(cps[0].z) >= 6.0);

  // two well-separated jumps give two detections
  std::vector<Scalar> two(400);
  for (int i = 0; i < 400; ++i)
    two[i] = (i < 100 ? 0.0 : (i < 250 ? 5.0 : 12.0)) + jitter(i);
  auto cps2 = detect_changepoints(two);
  REQUIRE(cps2.size() == 2);
  CHECK(cps2[0].bin >= 100);
  CHECK(cps2[0].bin <= 102);
  CHECK(cps2[1].bin >= 250);
  CHECK(cps2[1].bin <= 252);
}

TEST_CASE("stationary noise rarely triggers the detector") {
  std::mt19937_64 rng(6);
  std::normal_distribution<Scalar> noise(0, 1.0);
  int clean = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Scalar> trace(200);
    for (auto& v : trace) v = noise(rng);
    if (detect_changepoints(trace).empty()) ++clean;
  }
  CHECK(clean >= 950);
}

TEST_CASE("aggregate quartiles are ordered and seed-order invariant") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<Scalar> d(-1, 1);
  std::vector<std::vector<Scalar>> runs(5, std::vector<Scalar>(40));
  for (auto& r : runs)
    for (auto& v : r) v = d(rng);
  runs[4].resize(35);  // truncation to the shortest run

  AggregateCurve agg = aggregate_quartiles(runs);
  REQUIRE(agg.median.size() == 35);
  for (size_t i = 0; i < agg.median.size(); ++i) {
    CHECK(agg.q1[i] <= agg.median[i]);
    CHECK(agg.median[i] <= agg.q3[i]);
  }

  std::vector<std::vector<Scalar>> shuffled = {runs[3], runs[0], runs[4], runs[2], runs[1]};
  AggregateCurve agg2 = aggregate_quartiles(shuffled);
  for (size_t i = 0; i < agg.median.size(); ++i) {
    CHECK(agg.median[i] == agg2.median[i]);
    CHECK(agg.q1[i] == agg2.q1[i]);
    CHECK(agg.q3[i] == agg2.q3[i]);
  }
}
