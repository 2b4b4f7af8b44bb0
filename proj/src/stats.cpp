#include "b2m/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "b2m/error.hpp"

namespace b2m {

namespace {

constexpr std::size_t kExactLimit = 12;

void require_samples(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("rank_sum_test: both samples must be non-empty");
  for (double v : a)
    if (std::isnan(v)) throw DomainError("rank_sum_test: NaN in sample a");
  for (double v : b)
    if (std::isnan(v)) throw DomainError("rank_sum_test: NaN in sample b");
}

struct Pooled {
  std::vector<double> ranks;  // midranks, a's values first then b's
  double tie_term = 0.0;      // sum over tie groups of t^3 - t
};

Pooled midranks(std::span<const double> a, std::span<const double> b) {
  std::vector<double> values(a.begin(), a.end());
  values.insert(values.end(), b.begin(), b.end());
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  Pooled p;
  p.ranks.resize(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) p.ranks[order[k]] = rank;
    const double t = static_cast<double>(j - i + 1);
    p.tie_term += t * t * t - t;
    i = j + 1;
  }
  return p;
}

double u_statistic(const Pooled& p, std::size_t n) {
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) rank_sum += p.ranks[i];
  return rank_sum - 0.5 * static_cast<double>(n * (n + 1));
}

}  // namespace

RankSumResult rank_sum_exact(std::span<const double> a, std::span<const double> b) {
  require_samples(a, b);
  const std::size_t n = a.size(), total = a.size() + b.size();
  if (total > 20) throw DomainError("rank_sum_exact: pooled size above 20");
  const Pooled p = midranks(a, b);
  RankSumResult r;
  r.exact = true;
  r.u = u_statistic(p, n);
  // Midranks are multiples of 0.5, so a small tolerance makes ties exact.
  double observed = 0.0;
  for (std::size_t i = 0; i < n; ++i) observed += p.ranks[i];
  std::uint64_t at_least = 0, count = 0;
  for (std::uint32_t mask = 0; mask < (1u << total); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != n) continue;
    double s = 0.0;
    for (std::size_t k = 0; k < total; ++k)
      if (mask & (1u << k)) s += p.ranks[k];
    ++count;
    if (s >= observed - 1e-9) ++at_least;
  }
  r.p_value = static_cast<double>(at_least) / static_cast<double>(count);
  return r;
}

RankSumResult rank_sum_normal(std::span<const double> a, std::span<const double> b) {
  require_samples(a, b);
  const double n = static_cast<double>(a.size()), m = static_cast<double>(b.size());
  const double total = n + m;
  const Pooled p = midranks(a, b);
  RankSumResult r;
  r.u = u_statistic(p, a.size());
  const double variance = n * m / 12.0 * ((total + 1.0) - p.tie_term / (total * (total - 1.0)));
  if (!(variance > 0.0)) {
    r.p_value = 1.0;  // every value tied
    return r;
  }
  const double z = (r.u - 0.5 * n * m - 0.5) / std::sqrt(variance);
  r.p_value = 0.5 * std::erfc(z / std::sqrt(2.0));
  return r;
}

RankSumResult rank_sum_test(std::span<const double> a, std::span<const double> b) {
  require_samples(a, b);
  return a.size() + b.size() <= kExactLimit ? rank_sum_exact(a, b) : rank_sum_normal(a, b);
}

double sample_mean(std::span<const double> xs) {
  if (xs.empty()) return std::nan("");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double standard_error(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double mu = sample_mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - mu) * (x - mu);
  const double n = static_cast<double>(xs.size());
  return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

}  // namespace b2m
