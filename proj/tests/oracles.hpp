#pragma once

// Independent reference computations used by the unit and acceptance suites.
// Nothing here calls into the library's likelihood, statistics or gradient
// code; each routine is a direct transcription of the defining formula.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

namespace oracle {

struct Params {
  double pi;
  double d;
};

/// Probability of one single-meeting speaker sequence, full attendance.
/// Memory term e^{-0.5 (t - t_last)}; zero before the member's first turn.
inline double sequence_probability(const std::vector<Params>& team, const std::vector<std::size_t>& seq) {
  const std::size_t n = team.size();
  std::vector<long> last(n, -1);
  double prob = 1.0;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const long t = static_cast<long>(k) + 1;
    std::vector<double> l(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (last[i] == t - 1) {
        l[i] = 0.0;
      } else if (last[i] < 0) {
        l[i] = team[i].pi;
      } else {
        l[i] = team[i].pi + team[i].d * std::exp(-0.5 * static_cast<double>(t - last[i]));
      }
    }
    const double total = std::accumulate(l.begin(), l.end(), 0.0);
    prob *= l[seq[k]] / total;
    last[seq[k]] = t;
  }
  return prob;
}

/// Every length-T sequence over n speakers with no immediate repeats.
inline std::vector<std::vector<std::size_t>> legal_sequences(std::size_t n, std::size_t length) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  std::function<void()> rec = [&] {
    if (cur.size() == length) {
      out.push_back(cur);
      return;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!cur.empty() && cur.back() == i) continue;
      cur.push_back(i);
      rec();
      cur.pop_back();
    }
  };
  rec();
  return out;
}

/// Two-sided / one-sided exact p of the rank-sum W = R_x - nx(nx+1)/2 by
/// enumerating every assignment of the pooled ranks to x (no ties).
inline double rank_sum_exact_p(std::size_t nx, std::size_t ny, double w_obs, int side /* -1 less, 0 two, +1 greater */) {
  const std::size_t n = nx + ny;
  std::vector<int> pick(n, 0);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(nx), 1);
  std::sort(pick.begin(), pick.end());
  std::size_t total = 0, le = 0, ge = 0;
  const double mean = static_cast<double>(nx * ny) / 2.0;
  std::size_t two = 0;
  do {
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (pick[i]) rank_sum += static_cast<double>(i + 1);
    const double w = rank_sum - static_cast<double>(nx * (nx + 1)) / 2.0;
    ++total;
    if (w <= w_obs + 1e-9) ++le;
    if (w >= w_obs - 1e-9) ++ge;
    if (std::abs(w - mean) >= std::abs(w_obs - mean) - 1e-9) ++two;
  } while (std::next_permutation(pick.begin(), pick.end()));
  const double t = static_cast<double>(total);
  if (side < 0) return static_cast<double>(le) / t;
  if (side > 0) return static_cast<double>(ge) / t;
  return std::min(1.0, static_cast<double>(two) / t);
}

/// Exact p of the signed-rank V (sum of ranks of positive diffs) by
/// enumerating all 2^n sign patterns of ranks 1..n (no ties, no zeros).
inline double signed_rank_exact_p(std::size_t n, double v_obs, int side) {
  std::size_t total = 0, le = 0, ge = 0, two = 0;
  const double mean = static_cast<double>(n * (n + 1)) / 4.0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::size_t{1} << i)) v += static_cast<double>(i + 1);
    ++total;
    if (v <= v_obs + 1e-9) ++le;
    if (v >= v_obs - 1e-9) ++ge;
    if (std::abs(v - mean) >= std::abs(v_obs - mean) - 1e-9) ++two;
  }
  const double t = static_cast<double>(total);
  if (side < 0) return static_cast<double>(le) / t;
  if (side > 0) return static_cast<double>(ge) / t;
  return std::min(1.0, static_cast<double>(two) / t);
}

/// Kruskal-Wallis H for tie-free data from the textbook formula.
inline double kruskal_h_no_ties(const std::vector<std::vector<double>>& groups) {
  std::vector<double> all;
  for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
  std::sort(all.begin(), all.end());
  const double n = static_cast<double>(all.size());
  double sum = 0.0;
  for (const auto& g : groups) {
    double r = 0.0;
    for (double v : g) r += static_cast<double>(std::lower_bound(all.begin(), all.end(), v) - all.begin() + 1);
    sum += r * r / static_cast<double>(g.size());
  }
  return 12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0);
}

/// Central finite-difference gradient of f at x.
inline std::vector<double> finite_difference(const std::function<double(const std::vector<double>&)>& f,
                                             std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace oracle
