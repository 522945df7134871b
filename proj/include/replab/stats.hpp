#ifndef REPLAB_STATS_HPP
#define REPLAB_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

namespace replab {

struct MeanStd {
  double mean = 0.0;
  std::optional<double> stddev;  // absent for n < 2 (Bessel-corrected)
};

inline MeanStd mean_std(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("mean_std: empty input");
  MeanStd r;
  r.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.stddev = std::sqrt(ss / (values.size() - 1));
  }
  return r;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Mid-ranks of |values|; ties share the average of the ranks they span.
inline std::vector<double> midranks_abs(const std::vector<double>& values) {
  const std::size_t m = values.size();
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(values[a]) < std::abs(values[b]); });
  std::vector<double> ranks(m);
  std::size_t i = 0;
  while (i < m) {
    std::size_t j = i;
    while (j + 1 < m && std::abs(values[idx[j + 1]]) == std::abs(values[idx[i]])) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
    i = j + 1;
  }
  return ranks;
}

struct WilcoxonResult {
  double w = 0.0;    // min(W+, W-)
  double p = 1.0;    // two-sided
  int m = 0;         // pairs remaining after dropping zero differences
  bool exact = false;
  bool degenerate = false;  // every difference was zero
};

// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
// are dropped, ties get mid-ranks. Exact null distribution by dynamic
// programming over rank sums for m <= exact_limit, otherwise a normal
// approximation with tie and continuity corrections.
inline WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                           const std::vector<double>& b, int exact_limit = 20) {
  if (a.size() != b.size()) throw std::invalid_argument("wilcoxon: unequal lengths");
  if (a.empty()) throw std::invalid_argument("wilcoxon: empty input");
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  WilcoxonResult res;
  res.m = static_cast<int>(diffs.size());
  if (diffs.empty()) {
    res.degenerate = true;
    res.p = 1.0;
    return res;
  }
  const std::vector<double> ranks = midranks_abs(diffs);
  double w_plus = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    total += ranks[i];
    if (diffs[i] > 0.0) w_plus += ranks[i];
  }
  const double w_minus = total - w_plus;
  res.w = std::min(w_plus, w_minus);

  const int m = res.m;
  if (m <= exact_limit) {
    // Doubling mid-ranks makes every rank an exact integer; count subsets by
    // achievable rank sum, then P(W <= w) is a dyadic rational.
    std::vector<std::int64_t> r2(m);
    std::int64_t max_sum = 0;
    for (int i = 0; i < m; ++i) {
      r2[i] = static_cast<std::int64_t>(std::llround(2.0 * ranks[i]));
      max_sum += r2[i];
    }
    std::vector<double> count(static_cast<std::size_t>(max_sum) + 1, 0.0);
    count[0] = 1.0;
    std::int64_t reach = 0;
    for (int i = 0; i < m; ++i) {
      reach += r2[i];
      for (std::int64_t s = reach; s >= r2[i]; --s) count[s] += count[s - r2[i]];
    }
    const std::int64_t w2 = static_cast<std::int64_t>(std::llround(2.0 * res.w));
    double below = 0.0;
    for (std::int64_t s = 0; s <= w2 && s <= max_sum; ++s) below += count[s];
    const double denom = std::ldexp(1.0, m);  // 2^m, exact for m <= 52
    res.p = std::min(1.0, 2.0 * below / denom);
    res.exact = true;
    return res;
  }

  // Normal approximation with tie correction and continuity correction.
  const double mu = m * (m + 1) / 4.0;
  double tie_term = 0.0;
  {
    std::vector<double> sorted;
    for (double d : diffs) sorted.push_back(std::abs(d));
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::size_t j = i;
      while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      tie_term += t * t * t - t;
      i = j + 1;
    }
  }
  const double var = m * (m + 1) * (2.0 * m + 1) / 24.0 - tie_term / 48.0;
  const double z = (res.w - mu + 0.5) / std::sqrt(var);
  res.p = std::min(1.0, 2.0 * normal_cdf(z));
  return res;
}

struct BHResult {
  std::vector<double> adjusted;  // same order as the input
  std::vector<bool> reject;      // adjusted <= q
};

// Benjamini-Hochberg step-up adjustment:
//   adjusted_(i) = min_{j >= i} p_(j) * m / j, capped at 1,
// evaluated over the ascending order and mapped back to input order.
inline BHResult benjamini_hochberg(const std::vector<double>& p, double q = 0.05) {
  const std::size_t m = p.size();
  for (double v : p)
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("benjamini_hochberg: p outside [0,1]");
  BHResult r;
  r.adjusted.assign(m, 0.0);
  r.reject.assign(m, false);
  if (m == 0) return r;
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  double running = 1.0;
  for (std::size_t i = m; i-- > 0;) {
    const double scaled = p[idx[i]] * static_cast<double>(m) / static_cast<double>(i + 1);
    running = std::min(running, std::min(1.0, scaled));
    r.adjusted[idx[i]] = running;
  }
  for (std::size_t i = 0; i < m; ++i) r.reject[i] = r.adjusted[i] <= q;
  return r;
}

// Mid-ranks of values in ascending order.
inline std::vector<double> midranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman_rho: bad input");
  return pearson(midranks(x), midranks(y));
}

enum class TrendAlternative { decreasing, increasing };

struct SpearmanTrend {
  double rho = 0.0;
  double p = 1.0;  // one-sided
  bool exact = false;
};

// One-sided Spearman trend test. Exact permutation p for n <= 8 (full
// enumeration of y orderings), normal approximation beyond.
inline SpearmanTrend spearman_trend(const std::vector<double>& x, const std::vector<double>& y,
                                    TrendAlternative alt) {
  SpearmanTrend res;
  res.rho = spearman_rho(x, y);
  const std::size_t n = x.size();
  const double observed = (alt == TrendAlternative::decreasing) ? res.rho : -res.rho;
  if (n <= 8) {
    std::vector<double> perm = y;
    std::sort(perm.begin(), perm.end());
    std::size_t total = 0;
    std::size_t at_least_as_extreme = 0;
    do {
      ++total;
      const double rho = spearman_rho(x, perm);
      const double stat = (alt == TrendAlternative::decreasing) ? rho : -rho;
      if (stat <= observed + 1e-12) ++at_least_as_extreme;
    } while (std::next_permutation(perm.begin(), perm.end()));
    res.p = static_cast<double>(at_least_as_extreme) / static_cast<double>(total);
    res.exact = true;
  } else {
    const double z = observed * std::sqrt(static_cast<double>(n - 1));
    res.p = normal_cdf(z);  // small (negative) z favors the alternative
  }
  return res;
}

}  // namespace replab

#endif  // REPLAB_STATS_HPP
