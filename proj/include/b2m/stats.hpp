#pragma once

#include <span>

namespace b2m {

struct RankSumResult {
  double u = 0.0;        // Mann-Whitney U of sample a (midranks for ties)
  double p_value = 1.0;  // one-sided, H1: a stochastically greater than b
  bool exact = false;
};

/// Wilcoxon rank-sum / Mann-Whitney U, one-sided (a > b). Exact permutation
/// p-value when n + m <= 12, otherwise the tie- and continuity-corrected
/// normal approximation.
RankSumResult rank_sum_test(std::span<const double> a, std::span<const double> b);

/// Exact branch: enumerates every split of the pooled midranks.
RankSumResult rank_sum_exact(std::span<const double> a, std::span<const double> b);
/// Normal-approximation branch.
RankSumResult rank_sum_normal(std::span<const double> a, std::span<const double> b);

double sample_mean(std::span<const double> xs);
/// Sample standard deviation over sqrt(n); 0 when n < 2.
double standard_error(std::span<const double> xs);

}  // namespace b2m
