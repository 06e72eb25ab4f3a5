#pragma once

// Rank-based tests: Kruskal-Wallis, Wilcoxon rank-sum (Mann-Whitney W) and
// signed-rank, with exact small-sample p-values and tie/continuity-corrected
// normal approximations otherwise.

#include <span>
#include <string>
#include <vector>

namespace mlspeak::stats {

enum class Alternative { two_sided, less, greater };

std::string to_string(Alternative a);
Alternative parse_alternative(const std::string& s);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::string method;
  Alternative alternative = Alternative::two_sided;
  bool exact = false;

  friend bool operator==(const TestResult&, const TestResult&) = default;
};

/// Average ranks (1-based) of the values, ties sharing their mean rank.
std::vector<double> average_ranks(std::span<const double> values);

double median(std::span<const double> values);

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

/// Linear-interpolation quantiles (the default "type 7" definition).
Quartiles quartiles(std::span<const double> values);

double spearman(std::span<const double> x, std::span<const double> y);

/// Survival function of the chi-square distribution.
double chi_square_sf(double x, double df);

/// Tie-corrected H with df = k - 1. All values identical gives H = 0, p = 1.
TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

/// W = rank sum of x minus nx(nx+1)/2. Exact when nx + ny <= 20 without ties.
TestResult wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y,
                             Alternative alternative = Alternative::two_sided);

/// V = sum of ranks of the positive differences, zeros dropped.
/// Exact when n <= 15 without tied magnitudes. Throws AllZeroDiffs.
TestResult wilcoxon_signed_rank(std::span<const double> diffs,
                                Alternative alternative = Alternative::two_sided);

/// Holm step-down adjustment, returned in input order.
std::vector<double> holm_adjust(std::span<const double> p);

struct PairwiseMatrix {
  std::size_t k = 0;
  std::vector<TestResult> tests;  ///< k x k row-major; diagonal has p = 1
  std::vector<double> p;          ///< unadjusted, k x k
  std::vector<double> p_holm;     ///< Holm-adjusted over the k(k-1)/2 pairs, k x k

  double at(std::size_t i, std::size_t j) const { return p[i * k + j]; }

  friend bool operator==(const PairwiseMatrix&, const PairwiseMatrix&) = default;
};

/// Rank-sum test for every unordered pair, run once as lower index vs higher
/// index (the direction of a one-sided alternative); the matrix is symmetric.
PairwiseMatrix pairwise_wilcoxon(const std::vector<std::vector<double>>& groups,
                                 Alternative alternative = Alternative::two_sided);

}  // namespace mlspeak::stats
