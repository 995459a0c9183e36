#include "ppsb/size_models.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <boost/math/special_functions/digamma.hpp>

namespace ppsb {

ObservedSizes ObservedSizes::from(std::vector<std::int64_t> sizes, std::int64_t N, std::size_t J)
{
  ObservedSizes obs;
  obs.N = N;
  obs.J = J;
  obs.Js = sizes.size();
  std::map<std::int64_t, double> tally;
  std::int64_t sum = 0;
  for (auto n : sizes) {
    if (n < 1)
      throw SizeModelError("observed cluster sizes must be >= 1");
    tally[n] += 1.0;
    sum += n;
  }
  if (obs.Js > J || sum > N)
    throw SizeModelError("observed sizes exceed the population totals");
  for (const auto& [value, count] : tally) {
    obs.unique.push_back(value);
    obs.counts.push_back(count);
  }
  obs.sizes = std::move(sizes);
  return obs;
}

ObservedSizes ObservedSizes::from_sample(const TwoStageSample& sample)
{
  return from(sample.observed_sizes(), sample.N, sample.J);
}

BbDraw bb_draw(const ObservedSizes& obs, Rng& rng)
{
  if (obs.unique.empty())
    throw SizeModelError("Bayesian bootstrap needs at least one observed size");
  BbDraw draw;
  draw.psi = dirichlet_draw(obs.counts, rng);
  draw.psi_star.resize(draw.psi.size());
  double total = 0.0;
  for (std::size_t b = 0; b < obs.unique.size(); ++b) {
    const double pi =
        static_cast<double>(obs.Js) * static_cast<double>(obs.unique[b]) / static_cast<double>(obs.N);
    if (!(pi > 0.0 && pi < 1.0))
      throw SizeModelError("selection probability of an observed size is not in (0, 1)");
    draw.psi_star[b] = draw.psi[b] * (1.0 - pi) / pi;
    total += draw.psi_star[b];
  }
  for (auto& v : draw.psi_star)
    v /= total;
  draw.nonsampled_counts =
      multinomial_draw(static_cast<std::int64_t>(obs.J - obs.Js), draw.psi_star, rng);
  return draw;
}

std::vector<std::int64_t> bb_posterior_nonsampled(const ObservedSizes& obs, Rng& rng)
{
  auto draw = bb_draw(obs, rng);
  std::vector<std::int64_t> sizes;
  sizes.reserve(obs.J - obs.Js);
  for (std::size_t b = 0; b < obs.unique.size(); ++b)
    sizes.insert(sizes.end(), static_cast<std::size_t>(draw.nonsampled_counts[b]), obs.unique[b]);
  auto perm = random_permutation(sizes.size(), rng);
  std::vector<std::int64_t> out(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i)
    out[i] = sizes[perm[i]];
  return out;
}

double negbin_log_pmf(std::int64_t m, double k, double p)
{
  const double mm = static_cast<double>(m);
  return std::lgamma(mm + k) - std::lgamma(k) - std::lgamma(mm + 1.0) + k * std::log(p) +
         mm * std::log1p(-p);
}

double lognormal_log_density(double x, double mu, double tau)
{
  const double z = (std::log(x) - mu) / tau;
  return -std::log(x) - std::log(tau) - 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * z * z;
}

namespace {

void check_negbin(double k, double p)
{
  if (!(k > 0.0) || !(p > 0.0 && p < 1.0))
    throw SizeModelError("NegBin parameters need k > 0 and 0 < p < 1");
}

}  // namespace

SizeLoglik negbin_size_loglik_grad(std::span<const std::int64_t> observed, double k, double p)
{
  check_negbin(k, p);
  SizeLoglik out;
  const double r = k + 1.0;
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  const double lg_r = std::lgamma(r);
  const double dg_r = boost::math::digamma(r);
  for (auto n : observed) {
    if (n < 1)
      throw SizeModelError("an observed PPS cluster size of 0 is impossible");
    const double w = static_cast<double>(n - 1);
    out.value += std::lgamma(w + r) - lg_r - std::lgamma(w + 1.0) + r * log_p + w * log_q;
    out.d_first += boost::math::digamma(w + r) - dg_r + log_p;
    out.d_second += r / p - w / (1.0 - p);
  }
  return out;
}

double negbin_size_loglik(std::span<const std::int64_t> observed, double k, double p)
{
  check_negbin(k, p);
  double total = 0.0;
  for (auto n : observed) {
    if (n < 1)
      throw SizeModelError("an observed PPS cluster size of 0 is impossible");
    total += negbin_log_pmf(n - 1, k + 1.0, p);
  }
  return total;
}

SizeLoglik lognormal_size_loglik_grad(std::span<const double> observed, double mu, double tau)
{
  if (!(tau > 0.0))
    throw SizeModelError("lognormal scale must be positive");
  SizeLoglik out;
  const double loc = mu + tau * tau;
  const double t2 = tau * tau;
  for (double n : observed) {
    if (!(n >= 1.0))
      throw SizeModelError("observed sizes must be >= 1");
    const double r = std::log(n) - loc;
    out.value += lognormal_log_density(n, loc, tau);
    out.d_first += r / t2;
    // d/dtau of -log(tau) - r^2 / (2 tau^2) with r depending on tau via loc.
    out.d_second += -1.0 / tau + r * r / (t2 * tau) + 2.0 * r / tau;
  }
  return out;
}

double lognormal_size_loglik(std::span<const double> observed, double mu, double tau)
{
  return lognormal_size_loglik_grad(observed, mu, tau).value;
}

std::int64_t negbin_draw(const NegBinParams& params, Rng& rng)
{
  check_negbin(params.k, params.p);
  const double rate = gamma_draw(params.k, (1.0 - params.p) / params.p, rng);
  return poisson_draw(rate, rng);
}

std::vector<std::int64_t> rejection_sample_nonsampled(const SizeCandidate& candidate,
                                                      std::size_t J, std::size_t Js,
                                                      std::int64_t N, Rng& rng,
                                                      const RejectionOptions& options,
                                                      RejectionStats* stats)
{
  if (Js >= J)
    throw SizeModelError("rejection sampling needs Js < J");
  const std::size_t want = J - Js;
  std::vector<std::int64_t> out;
  out.reserve(want);
  RejectionStats local;
  const double ratio = static_cast<double>(Js) / static_cast<double>(N);
  while (out.size() < want) {
    if (local.attempts >= options.max_attempts)
      throw SizeModelError("rejection sampler exceeded its draw cap");
    if (local.attempts >= options.check_after &&
        static_cast<double>(local.accepted) <
            options.min_acceptance * static_cast<double>(local.attempts))
      throw SizeModelError("rejection sampler acceptance rate below floor; size parameters "
                           "are inconsistent with (Js, N)");
    ++local.attempts;
    const double raw = candidate(rng);
    if (!std::isfinite(raw))
      continue;
    const std::int64_t size = std::max<std::int64_t>(1, std::llround(std::min(raw, 9.0e15)));
    const double accept = 1.0 - ratio * static_cast<double>(size);
    if (accept <= 0.0)
      continue;
    if (uniform01(rng) < accept) {
      out.push_back(size);
      ++local.accepted;
    }
  }
  if (stats)
    *stats = local;
  return out;
}

std::vector<std::int64_t> rejection_sample_nonsampled(const NegBinParams& params, std::size_t J,
                                                      std::size_t Js, std::int64_t N, Rng& rng,
                                                      const RejectionOptions& options)
{
  check_negbin(params.k, params.p);
  return rejection_sample_nonsampled(
      [&params](Rng& r) { return static_cast<double>(negbin_draw(params, r)); }, J, Js, N, rng,
      options);
}

std::vector<std::int64_t> rejection_sample_nonsampled(const LognormalParams& params,
                                                      std::size_t J, std::size_t Js,
                                                      std::int64_t N, Rng& rng,
                                                      const RejectionOptions& options)
{
  if (!(params.tau > 0.0))
    throw SizeModelError("lognormal scale must be positive");
  return rejection_sample_nonsampled(
      [&params](Rng& r) { return std::exp(params.mu + params.tau * std_normal(r)); }, J, Js, N,
      rng, options);
}

std::vector<std::int64_t> known_sizes(const FinitePopulation& pop, const TwoStageSample& sample)
{
  std::vector<std::int64_t> out;
  for (auto id : sample.nonsampled_ids())
    out.push_back(pop.frame.sizes.at(id));
  return out;
}

}  // namespace ppsb
