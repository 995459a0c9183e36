#include <gtest/gtest.h>

#include <boost/math/distributions/negative_binomial.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "ppsb/size_models.hpp"
#include "size_oracles.hpp"
#include "support.hpp"

using namespace ppsb;
using namespace ppsb::testing;

TEST(BayesianBootstrap, EqualSelectionProbabilitiesKeepSymmetry)
{
  ObservedSizes obs;
  obs.N = 1000;
  obs.J = 20;
  obs.Js = 2;
  obs.unique = {100, 100};
  obs.counts = {1.0, 1.0};
  obs.sizes = {100, 100};
  Rng rng(1);
  double mean = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i)
    mean += bb_draw(obs, rng).psi_star[0] / n;
  EXPECT_NEAR(mean, 0.5, 0.005);
}

TEST(BayesianBootstrap, OddsReweightingOfTwoSizes)
{
  // Sizes {100, 400}, Js = 2, N = 1000: odds 4 and 0.25.
  auto obs = ObservedSizes::from({100, 400}, 1000, 10);
  Rng rng(2);
  const int n = 100000;
  double w0 = 0.0, w1 = 0.0, star0 = 0.0;
  for (int i = 0; i < n; ++i) {
    auto d = bb_draw(obs, rng);
    w0 += d.psi[0] * 4.0;
    w1 += d.psi[1] * 0.25;
    star0 += d.psi_star[0] / n;
  }
  // E[psi_b] * odds_b, normalized.
  EXPECT_NEAR(w0 / (w0 + w1), 4.0 / 4.25, 0.01);
  EXPECT_NEAR(w1 / (w0 + w1), 0.25 / 4.25, 0.01);
  // Mean of the per-draw normalized weights: E[4u / (4u + 0.25 (1 - u))], u ~ U(0, 1).
  const double exact = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [](double u) { return 4.0 * u / (4.0 * u + 0.25 * (1.0 - u)); }, 0.0, 1.0);
  EXPECT_NEAR(exact, 0.8695, 1e-4);
  EXPECT_NEAR(star0, exact, 0.005);
}

TEST(BayesianBootstrap, NoNonsampledClustersGivesEmptyOutput)
{
  auto obs = ObservedSizes::from({10, 20, 30}, 100, 3);
  Rng rng(3);
  EXPECT_TRUE(bb_posterior_nonsampled(obs, rng).empty());
}

TEST(BayesianBootstrap, OutputsAreObservedValues)
{
  auto obs = ObservedSizes::from({10, 20, 20, 35}, 1000, 40);
  Rng rng(4);
  std::set<std::int64_t> allowed{10, 20, 35};
  for (int i = 0; i < 1000; ++i) {
    auto s = bb_posterior_nonsampled(obs, rng);
    ASSERT_EQ(s.size(), 36u);
    for (auto v : s)
      ASSERT_TRUE(allowed.count(v));
  }
}

TEST(BayesianBootstrap, CertaintySizeIsAnError)
{
  auto obs = ObservedSizes::from({10, 60}, 100, 5);
  Rng rng(5);
  EXPECT_THROW(bb_draw(obs, rng), SizeModelError);
}

TEST(BayesianBootstrap, PsiSumsToOne)
{
  auto obs = ObservedSizes::from({10, 20, 20, 35}, 1000, 40);
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    auto d = bb_draw(obs, rng);
    EXPECT_NEAR(std::accumulate(d.psi.begin(), d.psi.end(), 0.0), 1.0, 1e-12);
    EXPECT_NEAR(std::accumulate(d.psi_star.begin(), d.psi_star.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(NegBinSize, UnitSizeIsProbabilityOfZeroShift)
{
  std::vector<std::int64_t> one{1};
  for (double k : {0.3, 1.0, 7.5})
    for (double p : {0.1, 0.5, 0.9})
      EXPECT_NEAR(negbin_size_loglik(one, k, p), (k + 1.0) * std::log(p), 1e-12);
}

TEST(NegBinSize, MatchesBruteForceNormalization)
{
  for (std::int64_t m : {1, 2, 5, 17, 60}) {
    std::vector<std::int64_t> obs{m};
    EXPECT_NEAR(negbin_size_loglik(obs, 1.0, 0.5), std::log(biased_negbin_pmf(m, 1.0, 0.5)),
                1e-10)
        << "m=" << m;
  }
}

TEST(NegBinSize, ShiftIdentityAtRandomTriples)
{
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const double k = 0.2 + 15.0 * uniform01(rng);
    const double p = 0.02 + 0.9 * uniform01(rng);
    const double mean = k * (1.0 - p) / p;
    const auto m = std::max<std::int64_t>(1, uniform_int(1, static_cast<std::int64_t>(3 * mean + 5), rng));
    std::vector<std::int64_t> obs{m};
    EXPECT_NEAR(negbin_size_loglik(obs, k, p), std::log(biased_negbin_pmf(m, k, p)), 1e-10)
        << "k=" << k << " p=" << p << " m=" << m;
  }
}

TEST(NegBinSize, ZeroSizeIsAnError)
{
  std::vector<std::int64_t> obs{3, 0};
  EXPECT_THROW(negbin_size_loglik(obs, 1.0, 0.5), SizeModelError);
}

TEST(NegBinSize, GradientMatchesFiniteDifferences)
{
  std::vector<std::int64_t> obs{3, 8, 1, 14, 6};
  const double k = 2.3, p = 0.31, h = 1e-6;
  auto g = negbin_size_loglik_grad(obs, k, p);
  const double dk = (negbin_size_loglik(obs, k + h, p) - negbin_size_loglik(obs, k - h, p)) / (2 * h);
  const double dp = (negbin_size_loglik(obs, k, p + h) - negbin_size_loglik(obs, k, p - h)) / (2 * h);
  EXPECT_NEAR(g.d_first, dk, 1e-6 * std::max(1.0, std::abs(dk)));
  EXPECT_NEAR(g.d_second, dp, 1e-6 * std::max(1.0, std::abs(dp)));
  EXPECT_NEAR(g.value, negbin_size_loglik(obs, k, p), 1e-12);
}

TEST(NegBinSize, DrawMoments)
{
  Rng rng(8);
  NegBinParams params{3.0, 0.2};
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = static_cast<double>(negbin_draw(params, rng));
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  EXPECT_NEAR(mean, 12.0, 3.0 * std::sqrt(60.0 / n));
  EXPECT_NEAR(var / 60.0, 1.0, 0.03);
}

TEST(LognormalSize, ShiftedLocationMatchesQuadrature)
{
  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    const double mu = 2.0 + 4.0 * uniform01(rng);
    const double tau = 0.2 + 1.0 * uniform01(rng);
    for (double q : {-1.5, 0.0, 0.7, 2.0}) {
      const double x = std::exp(mu + tau * tau + q * tau);
      const double oracle = biased_lognormal_density(x, mu, tau);
      const std::vector<double> obs{x};
      const double ours = std::exp(lognormal_size_loglik(obs, mu, tau));
      EXPECT_NEAR(ours / oracle, 1.0, 1e-8) << "mu=" << mu << " tau=" << tau << " x=" << x;
    }
  }
}

TEST(LognormalSize, PpsDrawsRecoverShiftedLocation)
{
  // A large lognormal population sampled proportional to size.
  const double mu = 5.0, tau = 0.6;
  Rng rng(10);
  std::vector<double> pop(200000);
  for (auto& v : pop)
    v = std::exp(mu + tau * std_normal(rng));
  std::vector<double> cum(pop.size());
  std::partial_sum(pop.begin(), pop.end(), cum.begin());
  const int n = 10000;
  double sum_log = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = uniform01(rng) * cum.back();
    const auto it = std::lower_bound(cum.begin(), cum.end(), u);
    sum_log += std::log(pop[static_cast<std::size_t>(it - cum.begin())]);
  }
  EXPECT_NEAR(sum_log / n, mu + tau * tau, 3.0 * tau / std::sqrt(n) + 0.01);
}

TEST(LognormalSize, VanishingScaleIsDegenerate)
{
  const double mu = 2.0;
  const std::vector<double> off{std::exp(mu) * 1.01};
  EXPECT_LT(lognormal_size_loglik(off, mu, 1e-6), -1e6);
  EXPECT_LT(lognormal_size_loglik(off, mu, 1e-9), lognormal_size_loglik(off, mu, 1e-6));
}

TEST(LognormalSize, GradientMatchesFiniteDifferences)
{
  std::vector<double> obs{40.0, 95.0, 210.0, 63.0};
  const double mu = 3.7, tau = 0.8, h = 1e-6;
  auto g = lognormal_size_loglik_grad(obs, mu, tau);
  const double dm =
      (lognormal_size_loglik(obs, mu + h, tau) - lognormal_size_loglik(obs, mu - h, tau)) / (2 * h);
  const double dt =
      (lognormal_size_loglik(obs, mu, tau + h) - lognormal_size_loglik(obs, mu, tau - h)) / (2 * h);
  EXPECT_NEAR(g.d_first, dm, 1e-6 * std::max(1.0, std::abs(dm)));
  EXPECT_NEAR(g.d_second, dt, 1e-6 * std::max(1.0, std::abs(dt)));
}

TEST(Rejection, NegligibleSelectionReproducesPopulationLaw)
{
  // Js / J tiny and N huge: acceptance is ~1, so draws follow NegBin(k, p).
  NegBinParams params{4.0, 0.3};
  Rng rng(11);
  std::vector<std::int64_t> draws;
  while (draws.size() < 100000) {
    auto s = rejection_sample_nonsampled(params, 10001, 1, 100000000, rng);
    draws.insert(draws.end(), s.begin(), s.end());
  }
  draws.resize(100000);
  std::map<std::int64_t, double> counts;
  for (auto v : draws)
    counts[v] += 1.0;
  boost::math::negative_binomial_distribution<double> law(4.0, 0.3);
  double ks = 0.0, emp = 0.0;
  for (std::int64_t m = 1; m < 200; ++m) {
    emp += counts.count(m) ? counts[m] / 100000.0 : 0.0;
    // Zero draws are emitted as 1.
    const double cdf = boost::math::cdf(law, static_cast<double>(m));
    ks = std::max(ks, std::abs(emp - cdf));
  }
  EXPECT_LT(ks, 0.02);
}

TEST(Rejection, CertaintySizesAreNeverEmitted)
{
  Rng rng(12);
  const std::int64_t N = 300;
  const std::size_t Js = 3;
  auto candidate = [](Rng& r) { return static_cast<double>(uniform_int(1, 200, r)); };
  RejectionStats stats;
  auto out = rejection_sample_nonsampled(candidate, 1000, Js, N, rng, {}, &stats);
  EXPECT_EQ(out.size(), 997u);
  for (auto v : out)
    EXPECT_LT(static_cast<double>(Js) * static_cast<double>(v) / static_cast<double>(N), 1.0);
  EXPECT_GT(stats.attempts, stats.accepted);
}

TEST(Rejection, MatchesEnumeratedConditionalLaw)
{
  // Sizes on {1..20} with pmf proportional to (21 - m); J = 10, Js = 3, N = 100.
  std::vector<double> pmf(21, 0.0);
  for (int m = 1; m <= 20; ++m)
    pmf[m] = 21.0 - m;
  std::vector<double> cum(21, 0.0);
  std::partial_sum(pmf.begin(), pmf.end(), cum.begin());
  auto candidate = [&](Rng& r) {
    const double u = uniform01(r) * cum.back();
    return static_cast<double>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
  };
  std::vector<double> exact(21, 0.0);
  double z = 0.0;
  for (int m = 1; m <= 20; ++m) {
    exact[m] = std::max(0.0, 1.0 - 3.0 * m / 100.0) * pmf[m];
    z += exact[m];
  }
  Rng rng(13);
  std::vector<double> counts(21, 0.0);
  double total = 0.0;
  while (total < 1e6) {
    for (auto v : rejection_sample_nonsampled(candidate, 10, 3, 100, rng)) {
      counts[static_cast<std::size_t>(v)] += 1.0;
      total += 1.0;
    }
  }
  double tv = 0.0;
  for (int m = 1; m <= 20; ++m)
    tv += 0.5 * std::abs(counts[m] / total - exact[m] / z);
  EXPECT_LT(tv, 0.01);
}

TEST(Rejection, LowAcceptanceIsAnError)
{
  Rng rng(14);
  auto candidate = [](Rng&) { return 1000.0; };
  RejectionOptions opts;
  opts.check_after = 1000;
  EXPECT_THROW(rejection_sample_nonsampled(candidate, 10, 3, 1000, rng, opts), SizeModelError);
  EXPECT_THROW(rejection_sample_nonsampled(candidate, 3, 3, 1000, rng, opts), SizeModelError);
}

TEST(KnownSizes, PassThroughOfNonsampledSizes)
{
  auto pop = poisson_population(30, 10, OutcomeKind::Continuous, 15);
  Rng rng(16);
  auto sample = draw_sample(pop, DesignSpec{10, FixedCount{5}}, rng);
  auto known = known_sizes(pop, sample);
  ASSERT_EQ(known.size(), 20u);
  auto ids = sample.nonsampled_ids();
  for (std::size_t k = 0; k < ids.size(); ++k)
    EXPECT_EQ(known[k], pop.frame.sizes[ids[k]]);
  auto obs = sample.observed_sizes();
  EXPECT_EQ(std::accumulate(known.begin(), known.end(), std::int64_t{0}) +
                std::accumulate(obs.begin(), obs.end(), std::int64_t{0}),
            pop.total());
}
