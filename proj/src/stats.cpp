#include "mlspeak/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

#include "mlspeak/errors.hpp"

namespace mlspeak::stats {

namespace {

constexpr std::size_t kExactRankSumLimit = 20;
constexpr std::size_t kExactSignedRankLimit = 15;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Sum over tie groups of (t^3 - t).
double tie_term(std::span<const double> values) {
  std::map<double, std::size_t> counts;
  for (double v : values) ++counts[v];
  double s = 0.0;
  for (const auto& [v, t] : counts) {
    const double td = static_cast<double>(t);
    s += td * td * td - td;
  }
  return s;
}

double p_from_z(double z, Alternative alt) {
  switch (alt) {
    case Alternative::less: return normal_cdf(z);
    case Alternative::greater: return 1.0 - normal_cdf(z);
    case Alternative::two_sided: return std::min(1.0, 2.0 * std::min(normal_cdf(z), 1.0 - normal_cdf(z)));
  }
  return 1.0;
}

double continuity(double centered, Alternative alt) {
  switch (alt) {
    case Alternative::less: return -0.5;
    case Alternative::greater: return 0.5;
    case Alternative::two_sided: return centered > 0 ? 0.5 : (centered < 0 ? -0.5 : 0.0);
  }
  return 0.0;
}

// counts[s] = number of ways to reach sum s; the tail probabilities follow.
double exact_p(const std::vector<double>& counts, std::size_t observed, Alternative alt) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  double le = 0.0;
  for (std::size_t s = 0; s <= observed && s < counts.size(); ++s) le += counts[s];
  double ge = 0.0;
  for (std::size_t s = observed; s < counts.size(); ++s) ge += counts[s];
  switch (alt) {
    case Alternative::less: return le / total;
    case Alternative::greater: return ge / total;
    case Alternative::two_sided: return std::min(1.0, 2.0 * std::min(le, ge) / total);
  }
  return 1.0;
}

bool has_ties(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return std::adjacent_find(v.begin(), v.end()) != v.end();
}

}  // namespace

std::string to_string(Alternative a) {
  switch (a) {
    case Alternative::two_sided: return "two.sided";
    case Alternative::less: return "less";
    case Alternative::greater: return "greater";
  }
  return "two.sided";
}

Alternative parse_alternative(const std::string& s) {
  if (s == "two.sided" || s == "two-sided" || s == "two_sided") return Alternative::two_sided;
  if (s == "less") return Alternative::less;
  if (s == "greater") return Alternative::greater;
  throw InvalidArgument("unknown alternative '" + s + "'");
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double median(std::span<const double> values) { return quartiles(values).median; }

Quartiles quartiles(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("quantiles of an empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  auto q = [&](double prob) {
    const double h = (static_cast<double>(v.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  return {q(0.25), q(0.5), q(0.75)};
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("spearman needs paired samples of size >= 2");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double chi_square_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw InvalidArgument("Kruskal-Wallis needs at least two groups");
  std::vector<double> pooled;
  for (const auto& g : groups) {
    if (g.empty()) throw InvalidArgument("Kruskal-Wallis groups must be nonempty");
    pooled.insert(pooled.end(), g.begin(), g.end());
  }
  TestResult r;
  r.method = "Kruskal-Wallis rank sum test";
  const double n = static_cast<double>(pooled.size());
  const double ties = 1.0 - tie_term(pooled) / (n * n * n - n);
  if (!(ties > 0.0)) {
    r.statistic = 0.0;
    r.p_value = 1.0;
    return r;
  }
  const auto ranks = average_ranks(pooled);
  double acc = 0.0;
  std::size_t offset = 0;
  for (const auto& g : groups) {
    const double sum = std::accumulate(ranks.begin() + static_cast<std::ptrdiff_t>(offset),
                                       ranks.begin() + static_cast<std::ptrdiff_t>(offset + g.size()), 0.0);
    acc += sum * sum / static_cast<double>(g.size());
    offset += g.size();
  }
  const double h = (12.0 / (n * (n + 1.0)) * acc - 3.0 * (n + 1.0)) / ties;
  r.statistic = std::max(h, 0.0);
  r.p_value = std::clamp(chi_square_sf(r.statistic, static_cast<double>(groups.size() - 1)), 0.0, 1.0);
  return r;
}

TestResult wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y, Alternative alternative) {
  if (x.empty() || y.empty()) throw InvalidArgument("rank-sum test needs two nonempty samples");
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto ranks = average_ranks(pooled);
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  const double rank_sum = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(x.size()), 0.0);

  TestResult r;
  r.statistic = rank_sum - nx * (nx + 1.0) / 2.0;
  r.alternative = alternative;

  if (pooled.size() <= kExactRankSumLimit && !has_ties(pooled)) {
    // counts[k][s]: subsets of size k of {1..N} whose ranks sum (minus k(k+1)/2) to s.
    const std::size_t n = pooled.size();
    const std::size_t m = x.size();
    const std::size_t max_w = x.size() * y.size();
    std::vector<std::vector<double>> dp(m + 1, std::vector<double>(n * (n + 1) / 2 + 1, 0.0));
    dp[0][0] = 1.0;
    for (std::size_t v = 1; v <= n; ++v)
      for (std::size_t k = std::min(v, m); k >= 1; --k)
        for (std::size_t s = dp[k].size() - 1; s >= v; --s) dp[k][s] += dp[k - 1][s - v];
    std::vector<double> counts(max_w + 1, 0.0);
    const std::size_t base = m * (m + 1) / 2;
    for (std::size_t w = 0; w <= max_w; ++w) counts[w] = dp[m][w + base];
    r.method = "Wilcoxon rank sum exact test";
    r.exact = true;
    r.p_value = exact_p(counts, static_cast<std::size_t>(std::llround(r.statistic)), alternative);
    return r;
  }

  r.method = "Wilcoxon rank sum test with continuity correction";
  const double n = nx + ny;
  const double sigma =
      std::sqrt(nx * ny / 12.0 * ((n + 1.0) - tie_term(pooled) / (n * (n - 1.0))));
  const double centered = r.statistic - nx * ny / 2.0;
  if (!(sigma > 0.0)) {
    r.p_value = 1.0;
    return r;
  }
  const double z = (centered - continuity(centered, alternative)) / sigma;
  r.p_value = std::clamp(p_from_z(z, alternative), 0.0, 1.0);
  return r;
}

TestResult wilcoxon_signed_rank(std::span<const double> diffs, Alternative alternative) {
  std::vector<double> nz;
  for (double d : diffs)
    if (d != 0.0) nz.push_back(d);
  if (nz.empty()) throw AllZeroDiffs("every paired difference is zero");

  std::vector<double> mags;
  for (double d : nz) mags.push_back(std::abs(d));
  const auto ranks = average_ranks(mags);
  double v = 0.0;
  for (std::size_t i = 0; i < nz.size(); ++i)
    if (nz[i] > 0.0) v += ranks[i];

  TestResult r;
  r.statistic = v;
  r.alternative = alternative;
  const std::size_t n = nz.size();

  if (n <= kExactSignedRankLimit && !has_ties(mags)) {
    const std::size_t max_v = n * (n + 1) / 2;
    std::vector<double> counts(max_v + 1, 0.0);
    counts[0] = 1.0;
    for (std::size_t k = 1; k <= n; ++k)
      for (std::size_t s = max_v; s >= k; --s) counts[s] += counts[s - k];
    r.method = "Wilcoxon signed rank exact test";
    r.exact = true;
    r.p_value = exact_p(counts, static_cast<std::size_t>(std::llround(v)), alternative);
    return r;
  }

  r.method = "Wilcoxon signed rank test with continuity correction";
  const double nd = static_cast<double>(n);
  const double sigma = std::sqrt(nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term(mags) / 48.0);
  const double centered = v - nd * (nd + 1.0) / 4.0;
  if (!(sigma > 0.0)) {
    r.p_value = 1.0;
    return r;
  }
  const double z = (centered - continuity(centered, alternative)) / sigma;
  r.p_value = std::clamp(p_from_z(z, alternative), 0.0, 1.0);
  return r;
}

std::vector<double> holm_adjust(std::span<const double> p) {
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  std::vector<double> adj(m);
  double running = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double v = std::min(1.0, static_cast<double>(m - i) * p[order[i]]);
    running = std::max(running, v);
    adj[order[i]] = running;
  }
  return adj;
}

PairwiseMatrix pairwise_wilcoxon(const std::vector<std::vector<double>>& groups, Alternative alternative) {
  if (groups.size() < 2) throw InvalidArgument("pairwise comparisons need at least two groups");
  const std::size_t k = groups.size();
  PairwiseMatrix out;
  out.k = k;
  out.tests.resize(k * k);
  out.p.assign(k * k, 1.0);
  out.p_holm.assign(k * k, 1.0);

  std::vector<double> raw;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < k; ++i) {
    out.tests[i * k + i].method = "identity";
    for (std::size_t j = i + 1; j < k; ++j) {
      const auto t = wilcoxon_rank_sum(groups[i], groups[j], alternative);
      out.tests[i * k + j] = t;
      out.tests[j * k + i] = t;
      out.p[i * k + j] = out.p[j * k + i] = t.p_value;
      raw.push_back(t.p_value);
      pairs.emplace_back(i, j);
    }
  }
  const auto adj = holm_adjust(raw);
  for (std::size_t q = 0; q < pairs.size(); ++q) {
    const auto [i, j] = pairs[q];
    out.p_holm[i * k + j] = out.p_holm[j * k + i] = adj[q];
  }
  return out;
}

}  // namespace mlspeak::stats
