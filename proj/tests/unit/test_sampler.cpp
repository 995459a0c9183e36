#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "ppsb/diagnostics.hpp"
#include "ppsb/hmc.hpp"

using namespace ppsb;

namespace {

ChainValues iid_chains(int chains, int draws, Rng& rng)
{
  ChainValues v(chains, std::vector<double>(draws));
  for (auto& c : v)
    for (auto& x : c)
      x = std_normal(rng);
  return v;
}

/// Independent normals with standard deviations 1, 10 and 0.1.
double scaled_normal(std::span<const double> q, std::span<double> g)
{
  static constexpr double sd[] = {1.0, 10.0, 0.1};
  double lp = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double z = q[i] / sd[i];
    lp -= 0.5 * z * z;
    g[i] = -z / sd[i];
  }
  return lp;
}

}  // namespace

TEST(SplitRhat, IidDrawsStayNearOne)
{
  Rng rng(1);
  int inside = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    const double r = split_rhat(iid_chains(4, 1000, rng));
    // Split R-hat can dip a hair below 1 by sampling noise.
    inside += (r >= 1.0 - 2e-3 && r <= 1.02) ? 1 : 0;
  }
  EXPECT_GE(inside, static_cast<int>(0.99 * trials));
}

TEST(SplitRhat, DisagreeingConstantChainsAreInfinite)
{
  ChainValues v{std::vector<double>(100, 1.0), std::vector<double>(100, 2.0)};
  EXPECT_TRUE(std::isinf(split_rhat(v)));
}

TEST(SplitRhat, ShiftedChainsAreLarge)
{
  Rng rng(2);
  auto v = iid_chains(4, 500, rng);
  for (auto& x : v[0])
    x += 5.0;
  EXPECT_GT(split_rhat(v), 1.5);
}

TEST(SplitRhat, IdenticalValuesAreUndefinedButHandled)
{
  ChainValues v(4, std::vector<double>(100, 3.0));
  EXPECT_TRUE(std::isnan(split_rhat(v)));
  Diagnostics d;
  d.names = {"a", "b"};
  d.rhat = {split_rhat(v), 1.01};
  d.ess = {effective_sample_size(v), 400.0};
  EXPECT_EQ(d.undefined_rhat(), 1u);
  EXPECT_DOUBLE_EQ(d.max_rhat(), 1.01);
}

TEST(Ess, IidDrawsGiveFullSampleSize)
{
  Rng rng(3);
  const double ess = effective_sample_size(iid_chains(4, 1000, rng));
  EXPECT_NEAR(ess / 4000.0, 1.0, 0.15);
}

TEST(Ess, AutoregressiveDrawsMatchTheory)
{
  // AR(1) with rho = 0.9: ESS = n (1 - rho) / (1 + rho). A single estimate has
  // ~10% sampling spread, so average over 20 independent sets.
  Rng rng(4);
  const double rho = 0.9;
  const double expected = 20000.0 * (1.0 - rho) / (1.0 + rho);
  double ratio = 0.0;
  const int sets = 20;
  for (int s = 0; s < sets; ++s) {
    ChainValues v(4, std::vector<double>(5000));
    for (auto& c : v) {
      double x = std_normal(rng);
      for (auto& y : c) {
        x = rho * x + std::sqrt(1.0 - rho * rho) * std_normal(rng);
        y = x;
      }
    }
    ratio += effective_sample_size(v) / expected / sets;
  }
  EXPECT_NEAR(ratio, 1.0, 0.1);
}

TEST(DualAveraging, FindsStepForTargetAcceptance)
{
  // Acceptance exp(-step): the target 0.8 is met at step = -log 0.8.
  DualAveraging da(1.0, 0.8);
  double step = 1.0;
  for (int i = 0; i < 2000; ++i)
    step = da.update(std::exp(-step));
  EXPECT_NEAR(da.final_step(), -std::log(0.8), 0.02);
}

TEST(Hmc, RecoversIndependentNormalMoments)
{
  Rng rng(5);
  HmcSettings s;
  s.warmup = 1000;
  s.samples = 4000;
  auto chain = run_hmc_chain(scaled_normal, {0.5, -3.0, 0.01}, s, rng);
  ASSERT_EQ(chain.draws.size(), 4000u);
  static constexpr double sd[] = {1.0, 10.0, 0.1};
  for (std::size_t i = 0; i < 3; ++i) {
    double m = 0.0, v = 0.0;
    for (const auto& d : chain.draws)
      m += d[i] / 4000.0;
    for (const auto& d : chain.draws)
      v += (d[i] - m) * (d[i] - m) / 3999.0;
    EXPECT_NEAR(m / sd[i], 0.0, 0.15) << i;
    EXPECT_NEAR(std::sqrt(v) / sd[i], 1.0, 0.1) << i;
  }
  EXPECT_EQ(chain.divergences, 0);
  EXPECT_NEAR(chain.mean_accept, 0.8, 0.15);
  // The adapted metric approximates the target variances.
  EXPECT_NEAR(chain.inverse_metric[1] / 100.0, 1.0, 0.5);
  EXPECT_NEAR(chain.inverse_metric[2] / 0.01, 1.0, 0.5);
}

TEST(Hmc, SameSeedSameDraws)
{
  HmcSettings s;
  s.warmup = 200;
  s.samples = 200;
  Rng a(6), b(6);
  auto c1 = run_hmc_chain(scaled_normal, {0.0, 0.0, 0.0}, s, a);
  auto c2 = run_hmc_chain(scaled_normal, {0.0, 0.0, 0.0}, s, b);
  EXPECT_EQ(c1.draws, c2.draws);
}

TEST(Hmc, OversizedStepsAreFlaggedDivergent)
{
  HmcSettings s;
  s.warmup = 100;
  s.samples = 200;
  s.step_size_scale = 60.0;
  Rng rng(7);
  auto chain = run_hmc_chain(scaled_normal, {0.0, 0.0, 0.0}, s, rng);
  EXPECT_GT(chain.divergences, 0);
}
