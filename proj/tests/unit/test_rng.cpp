#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "ppsb/rng.hpp"

using namespace ppsb;

TEST(Rng, DerivedSeedsAreStableAndDistinct)
{
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
  Rng a = make_rng(5, 0), b = make_rng(5, 0);
  for (int i = 0; i < 100; ++i)
    EXPECT_EQ(a(), b());
}

TEST(Rng, UniformIsOpenInterval)
{
  Rng rng(3);
  for (int i = 0; i < 100000; ++i) {
    const double u = uniform01(rng);
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, DirichletSumsToOne)
{
  Rng rng(4);
  std::vector<double> alpha{0.5, 1.0, 3.0};
  for (int i = 0; i < 1000; ++i) {
    auto d = dirichlet_draw(alpha, rng);
    EXPECT_NEAR(std::accumulate(d.begin(), d.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(Rng, DirichletMeanMatchesAlphaShares)
{
  Rng rng(5);
  std::vector<double> alpha{1.0, 2.0, 5.0};
  std::vector<double> mean(3, 0.0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    auto d = dirichlet_draw(alpha, rng);
    for (int k = 0; k < 3; ++k)
      mean[k] += d[k] / n;
  }
  EXPECT_NEAR(mean[0], 1.0 / 8.0, 0.003);
  EXPECT_NEAR(mean[1], 2.0 / 8.0, 0.003);
  EXPECT_NEAR(mean[2], 5.0 / 8.0, 0.003);
}

TEST(Rng, MultinomialConservesTrials)
{
  Rng rng(6);
  std::vector<double> p{2.0, 1.0, 0.0, 7.0};
  for (int i = 0; i < 1000; ++i) {
    auto c = multinomial_draw(37, p, rng);
    EXPECT_EQ(std::accumulate(c.begin(), c.end(), std::int64_t{0}), 37);
    EXPECT_EQ(c[2], 0);
  }
}

TEST(Rng, PermutationIsBijection)
{
  Rng rng(7);
  auto p = random_permutation(50, rng);
  std::sort(p.begin(), p.end());
  for (std::size_t i = 0; i < p.size(); ++i)
    EXPECT_EQ(p[i], i);
}

TEST(Rng, UniformIntCoversRange)
{
  Rng rng(8);
  std::vector<int> seen(26, 0);
  for (int i = 0; i < 10000; ++i) {
    const auto v = uniform_int(20, 45, rng);
    ASSERT_GE(v, 20);
    ASSERT_LE(v, 45);
    seen[static_cast<std::size_t>(v - 20)] = 1;
  }
  EXPECT_EQ(std::accumulate(seen.begin(), seen.end(), 0), 26);
}
