#include <gtest/gtest.h>

#include <cmath>

#include "tunegain/random.hpp"
#include "tunegain/stats.hpp"

using namespace tunegain;

namespace {

// Exact two-sided p by enumerating every assignment of the pooled ranks
// 1..m+n to the first sample (no ties).
double brute_force_p(std::size_t m, std::size_t n, double u_obs) {
  const std::size_t total = m + n;
  double lower = 0, upper = 0, count = 0;
  for (unsigned mask = 0; mask < (1u << total); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != m) continue;
    double rank_sum = 0;
    for (std::size_t r = 0; r < total; ++r)
      if (mask & (1u << r)) rank_sum += static_cast<double>(r + 1);
    double u = rank_sum - static_cast<double>(m * (m + 1)) / 2.0;
    count += 1;
    if (u <= u_obs) lower += 1;
    if (u >= u_obs) upper += 1;
  }
  return std::min(1.0, 2.0 * std::min(lower, upper) / count);
}

}  // namespace

TEST(MannWhitney, ClassicSmallCase) {
  auto r = mann_whitney_u(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6});
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(r.u, 0.0);
  EXPECT_DOUBLE_EQ(r.p, 0.1);
}

TEST(MannWhitney, IdenticalSamples) {
  auto r = mann_whitney_u(std::vector<double>{5, 5, 5}, std::vector<double>{5, 5, 5});
  EXPECT_DOUBLE_EQ(r.p, 1.0);
  EXPECT_FALSE(r.exact);
}

TEST(MannWhitney, ExactAgreesWithEnumerationUpTo6x6) {
  Rng rng(2024);
  for (std::size_t m = 1; m <= 6; ++m)
    for (std::size_t n = 1; n <= 6; ++n) {
      for (int trial = 0; trial < 5; ++trial) {
        // Distinct values: a random permutation of 1..m+n split into two samples.
        auto perm = sample_without_replacement(rng, m + n, m + n);
        std::vector<double> a, b;
        for (std::size_t i = 0; i < m + n; ++i) (i < m ? a : b).push_back(static_cast<double>(perm[i]));
        auto r = mann_whitney_u(a, b);
        ASSERT_TRUE(r.exact);
        EXPECT_NEAR(r.p, brute_force_p(m, n, r.u), 1e-12) << m << "x" << n;
      }
    }
}

TEST(MannWhitney, DistributionCountsAreBinomial) {
  for (std::size_t m = 1; m <= 8; ++m)
    for (std::size_t n = m; n <= 16; ++n) {
      auto d = u_distribution(m, n);
      double total = 0;
      for (double v : d) total += v;
      EXPECT_DOUBLE_EQ(total, std::round(std::tgamma(n + 1.0) / (std::tgamma(m + 1.0) * std::tgamma(n - m + 1.0))));
      for (std::size_t k = 0; k < d.size(); ++k) EXPECT_EQ(d[k], d[d.size() - 1 - k]);
    }
}

TEST(MannWhitney, StatisticsSumAndSymmetry) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t na = 1 + uniform_index(rng, 15), nb = 1 + uniform_index(rng, 15);
    std::vector<double> a(na), b(nb);
    for (auto& v : a) v = static_cast<double>(uniform_index(rng, 10));
    for (auto& v : b) v = static_cast<double>(uniform_index(rng, 10));
    auto ab = mann_whitney_u(a, b), ba = mann_whitney_u(b, a);
    EXPECT_DOUBLE_EQ(ab.u + ba.u, static_cast<double>(na * nb));
    EXPECT_NEAR(ab.p, ba.p, 1e-12);
    EXPECT_GE(ab.p, 0.0);
    EXPECT_LE(ab.p, 1.0);
  }
}

TEST(MannWhitney, NormalApproximationForLargeSamples) {
  std::vector<double> a, b;
  for (int i = 0; i < 25; ++i) {
    a.push_back(i);
    b.push_back(i + 30);
  }
  auto r = mann_whitney_u(a, b);
  EXPECT_FALSE(r.exact);
  EXPECT_LT(r.p, 1e-6);

  // Hand-computed: U = 0, mu = 312.5, var = 25*25*51/12, continuity 0.5.
  double z = (312.5 - 0.5) / std::sqrt(25.0 * 25.0 * 51.0 / 12.0);
  EXPECT_NEAR(r.p, std::erfc(z / std::sqrt(2.0)), 1e-15);
}

TEST(MannWhitney, TiesUseMidranks) {
  double tie = 0;
  auto r = midranks(std::vector<double>{3, 1, 3, 2}, tie);
  EXPECT_EQ(r, (std::vector<double>{3.5, 1, 3.5, 2}));
  EXPECT_EQ(tie, 6.0);
}

TEST(MannWhitney, EmptySampleThrows) {
  EXPECT_THROW(mann_whitney_u(std::vector<double>{}, std::vector<double>{1}), Error);
}
