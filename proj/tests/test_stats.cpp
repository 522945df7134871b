#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "replab/rng.hpp"
#include "replab/stats.hpp"

using namespace replab;

namespace {

// Brute-force two-sided exact p: enumerate all 2^m sign assignments over the
// mid-ranks and double the lower-tail mass of min(W+, W-).
double wilcoxon_bruteforce_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) diffs.push_back(a[i] - b[i]);
  const int m = static_cast<int>(diffs.size());
  if (m == 0) return 1.0;

  // independent mid-rank computation (insertion style)
  std::vector<double> absd;
  for (double d : diffs) absd.push_back(std::abs(d));
  std::vector<double> ranks(m);
  for (int i = 0; i < m; ++i) {
    int less = 0, equal = 0;
    for (int j = 0; j < m; ++j) {
      if (absd[j] < absd[i]) ++less;
      if (absd[j] == absd[i]) ++equal;
    }
    ranks[i] = less + (equal + 1) / 2.0;
  }

  double w_plus = 0.0, total = 0.0;
  for (int i = 0; i < m; ++i) {
    total += ranks[i];
    if (diffs[i] > 0) w_plus += ranks[i];
  }
  const double w_obs = std::min(w_plus, total - w_plus);

  long count = 0;
  const long assignments = 1L << m;
  for (long mask = 0; mask < assignments; ++mask) {
    double w = 0.0;
    for (int i = 0; i < m; ++i)
      if (mask & (1L << i)) w += ranks[i];
    if (w <= w_obs + 1e-12) ++count;
  }
  return std::min(1.0, 2.0 * static_cast<double>(count) / static_cast<double>(assignments));
}

// Literal transcription of the step-up definition, O(m^2).
std::vector<double> bh_bydefinition(const std::vector<double>& p) {
  const std::size_t m = p.size();
  std::vector<std::size_t> idx(m);
  for (std::size_t i = 0; i < m; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return p[x] < p[y]; });
  std::vector<double> adj(m);
  for (std::size_t i = 0; i < m; ++i) {
    double best = 1.0;
    for (std::size_t j = i; j < m; ++j)
      best = std::min(best, p[idx[j]] * static_cast<double>(m) / static_cast<double>(j + 1));
    adj[idx[i]] = best;
  }
  return adj;
}

}  // namespace

TEST_CASE("mean_std: singleton, hand case, monte carlo") {
  const MeanStd one = mean_std({3.0});
  CHECK(one.mean == 3.0);
  CHECK_FALSE(one.stddev.has_value());

  const MeanStd three = mean_std({1.0, 2.0, 3.0});
  CHECK(three.mean == Catch::Approx(2.0));
  CHECK(three.stddev.value() == Catch::Approx(1.0));

  CHECK_THROWS_AS(mean_std({}), std::invalid_argument);

  Rng rng(1);
  std::vector<double> draws(10000);
  for (auto& d : draws) d = rng.normal();
  const MeanStd mc = mean_std(draws);
  CHECK(std::abs(mc.mean) < 3.0 / std::sqrt(10000.0));
  CHECK(std::abs(mc.stddev.value() - 1.0) < 3.0 * std::sqrt(0.5 / 9999.0));
}

TEST_CASE("wilcoxon: identical pairs are degenerate with p = 1") {
  const std::vector<double> v = {1.0, 2.0, 3.0};
  const WilcoxonResult r = wilcoxon_signed_rank(v, v);
  CHECK(r.degenerate);
  CHECK(r.p == 1.0);
  CHECK(r.m == 0);
}

TEST_CASE("wilcoxon: six distinct positive differences give W = 0, p = 2/64") {
  const std::vector<double> a = {1.1, 2.2, 3.3, 4.4, 5.5, 6.6};
  const std::vector<double> b = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  const WilcoxonResult r = wilcoxon_signed_rank(a, b);
  CHECK(r.w == 0.0);
  CHECK(r.exact);
  CHECK(r.p == Catch::Approx(0.03125).epsilon(1e-12));
}

TEST_CASE("wilcoxon: exact p equals brute-force enumeration") {
  for (int trial = 0; trial < 50; ++trial) {
    Rng rng(3000 + trial);
    const int n = 3 + static_cast<int>(rng.uniform_int(10));  // m <= 12
    std::vector<double> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      // quantized values provoke ties and zero differences
      a[i] = std::round(rng.normal() * 4.0) / 4.0;
      b[i] = std::round(rng.normal() * 4.0) / 4.0;
    }
    const WilcoxonResult r = wilcoxon_signed_rank(a, b);
    const double brute = wilcoxon_bruteforce_p(a, b);
    CHECK(std::abs(r.p - brute) < 1e-12);
  }
}

TEST_CASE("wilcoxon: two-sided p is symmetric in the sample order") {
  Rng rng(4);
  std::vector<double> a(8), b(8);
  for (int i = 0; i < 8; ++i) {
    a[i] = rng.normal();
    b[i] = rng.normal();
  }
  CHECK(wilcoxon_signed_rank(a, b).p == wilcoxon_signed_rank(b, a).p);
}

TEST_CASE("wilcoxon: invariant under a constant shift of both members") {
  Rng rng(5);
  std::vector<double> a(9), b(9), a2(9), b2(9);
  for (int i = 0; i < 9; ++i) {
    a[i] = rng.normal();
    b[i] = rng.normal();
    a2[i] = a[i] + 17.5;
    b2[i] = b[i] + 17.5;
  }
  const WilcoxonResult r1 = wilcoxon_signed_rank(a, b);
  const WilcoxonResult r2 = wilcoxon_signed_rank(a2, b2);
  CHECK(r1.w == r2.w);
  CHECK(r1.p == r2.p);
}

TEST_CASE("wilcoxon: normal approximation tracks the exact p for mid-size m") {
  for (int trial = 0; trial < 30; ++trial) {
    Rng rng(7000 + trial);
    const int n = 15 + static_cast<int>(rng.uniform_int(6));  // 15..20
    std::vector<double> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = rng.normal() + 0.3;
      b[i] = rng.normal();
    }
    const WilcoxonResult exact = wilcoxon_signed_rank(a, b, 20);
    const WilcoxonResult approx = wilcoxon_signed_rank(a, b, 0);
    REQUIRE(exact.exact);
    REQUIRE_FALSE(approx.exact);
    CHECK(std::abs(exact.p - approx.p) < 0.02);
  }
}

TEST_CASE("benjamini-hochberg: single value, hand case, all ones") {
  SECTION("single p = 0.04 is kept and rejected at q = 0.05") {
    const BHResult r = benjamini_hochberg({0.04});
    CHECK(r.adjusted[0] == Catch::Approx(0.04));
    CHECK(r.reject[0]);
  }
  SECTION("{0.01, 0.02, 0.03, 0.04} all adjust to 0.04") {
    const BHResult r = benjamini_hochberg({0.01, 0.02, 0.03, 0.04});
    for (double adj : r.adjusted) CHECK(adj == Catch::Approx(0.04).epsilon(1e-12));
  }
  SECTION("all p = 1 rejects nothing") {
    const BHResult r = benjamini_hochberg({1.0, 1.0, 1.0});
    for (bool rej : r.reject) CHECK_FALSE(rej);
    for (double adj : r.adjusted) CHECK(adj == 1.0);
  }
  SECTION("out-of-range p is rejected") {
    CHECK_THROWS_AS(benjamini_hochberg({1.5}), std::invalid_argument);
  }
}

TEST_CASE("benjamini-hochberg: matches a by-definition reimplementation") {
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(100 + trial);
    const int m = 1 + static_cast<int>(rng.uniform_int(20));
    std::vector<double> p(m);
    for (auto& v : p) v = rng.uniform01();
    const BHResult r = benjamini_hochberg(p);
    const std::vector<double> ref = bh_bydefinition(p);
    for (int i = 0; i < m; ++i) CHECK(r.adjusted[i] == Catch::Approx(ref[i]).margin(1e-12));
  }
}

TEST_CASE("benjamini-hochberg: adjusted values are monotone in the sorted order") {
  Rng rng(6);
  std::vector<double> p(15);
  for (auto& v : p) v = rng.uniform01();
  const BHResult r = benjamini_hochberg(p);
  std::vector<std::size_t> idx(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  for (std::size_t i = 1; i < idx.size(); ++i)
    CHECK(r.adjusted[idx[i]] >= r.adjusted[idx[i - 1]] - 1e-15);
}

TEST_CASE("benjamini-hochberg rejects a superset of bonferroni") {
  for (int trial = 0; trial < 50; ++trial) {
    Rng rng(300 + trial);
    const int m = 2 + static_cast<int>(rng.uniform_int(12));
    std::vector<double> p(m);
    for (auto& v : p) v = std::pow(rng.uniform01(), 3.0);  // skew toward small values
    const BHResult r = benjamini_hochberg(p, 0.05);
    for (int i = 0; i < m; ++i) {
      const bool bonferroni = p[i] * m <= 0.05;
      if (bonferroni) CHECK(r.reject[i]);
    }
  }
}

TEST_CASE("spearman: hand values and exact permutation p") {
  CHECK(spearman_rho({1, 2, 3, 4}, {1, 2, 3, 4}) == Catch::Approx(1.0));
  CHECK(spearman_rho({1, 2, 3, 4}, {4, 3, 2, 1}) == Catch::Approx(-1.0));

  const std::vector<double> x = {1, 2, 3, 4, 5};
  const std::vector<double> y = {5, 4, 3, 2, 1};
  const SpearmanTrend t = spearman_trend(x, y, TrendAlternative::decreasing);
  CHECK(t.rho == Catch::Approx(-1.0));
  CHECK(t.exact);
  CHECK(t.p == Catch::Approx(1.0 / 120.0).epsilon(1e-12));

  const SpearmanTrend up = spearman_trend(x, {1, 2, 3, 4, 5}, TrendAlternative::increasing);
  CHECK(up.p == Catch::Approx(1.0 / 120.0).epsilon(1e-12));
}
