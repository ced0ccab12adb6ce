#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "tunegain/error.hpp"

namespace tunegain {

struct MannWhitneyResult {
  double u = 0.0;  // U statistic of the first sample
  double p = 1.0;  // two-sided
  bool exact = false;
};

/// Midranks (1-based) of the pooled sample; also returns the tie term
/// sum(t^3 - t) over tie groups.
inline std::vector<double> midranks(std::span<const double> pooled, double& tie_term) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return pooled[a] < pooled[b]; });
  std::vector<double> ranks(n);
  tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  return ranks;
}

/// Number of ways to choose m of the ranks 1..n with each achievable U
/// value (U = rank sum - m(m+1)/2), for U in [0, m(n-m)].
inline std::vector<double> u_distribution(std::size_t m, std::size_t n) {
  const std::size_t k = n - m;
  // ways[i][u]: subsets of size i from the ranks processed so far with statistic u.
  std::vector<std::vector<double>> ways(m + 1, std::vector<double>(m * k + 1, 0.0));
  ways[0][0] = 1.0;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = std::min(m, r + 1); i >= 1; --i) {
      // Choosing rank r (0-based) as the i-th member contributes r - (i - 1) to U.
      if (r + 1 < i) continue;
      std::size_t shift = r - (i - 1);
      if (shift > m * k) continue;
      for (std::size_t u = shift; u <= m * k; ++u) ways[i][u] += ways[i - 1][u - shift];
    }
  }
  return ways[m];
}

/// Two-sided Mann-Whitney U test. Exact null distribution when both samples
/// have at most 8 values and there are no ties; otherwise the normal
/// approximation with tie and continuity corrections.
inline MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error("mann_whitney_u: empty sample");
  const std::size_t na = a.size(), nb = b.size(), n = na + nb;
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  double tie_term = 0.0;
  auto ranks = midranks(pooled, tie_term);
  double ra = 0.0;
  for (std::size_t i = 0; i < na; ++i) ra += ranks[i];
  MannWhitneyResult res;
  res.u = ra - static_cast<double>(na * (na + 1)) / 2.0;

  if (na <= 8 && nb <= 8 && tie_term == 0.0) {
    auto dist = u_distribution(na, n);
    double total = std::accumulate(dist.begin(), dist.end(), 0.0);
    auto u = static_cast<std::size_t>(std::llround(res.u));
    double lower = 0.0, upper = 0.0;
    for (std::size_t k = 0; k < dist.size(); ++k) {
      if (k <= u) lower += dist[k];
      if (k >= u) upper += dist[k];
    }
    res.p = std::min(1.0, 2.0 * std::min(lower, upper) / total);
    res.exact = true;
    return res;
  }

  const double fa = static_cast<double>(na), fb = static_cast<double>(nb), fn = static_cast<double>(n);
  const double mu = fa * fb / 2.0;
  const double var = fa * fb / 12.0 * ((fn + 1.0) - tie_term / (fn * (fn - 1.0)));
  if (var <= 0.0) {
    res.p = 1.0;
    return res;
  }
  double z = std::max(0.0, std::abs(res.u - mu) - 0.5) / std::sqrt(var);
  res.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return res;
}

inline MannWhitneyResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
  return mann_whitney_u(std::span<const double>(a), std::span<const double>(b));
}

}  // namespace tunegain
