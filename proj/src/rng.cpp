#include "ppsb/rng.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ppsb {

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index)
{
  std::uint64_t z = parent + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double uniform01(Rng& rng)
{
  // 53 random bits, shifted off zero.
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double std_normal(Rng& rng)
{
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

double half_normal(double scale, Rng& rng)
{
  return std::abs(std_normal(rng)) * scale;
}

double gamma_draw(double shape, double scale, Rng& rng)
{
  if (!(shape > 0.0) || !(scale > 0.0))
    throw std::invalid_argument("gamma_draw: shape and scale must be positive");
  std::gamma_distribution<double> dist(shape, scale);
  return dist(rng);
}

std::int64_t poisson_draw(double mean, Rng& rng)
{
  if (mean <= 0.0)
    return 0;
  std::poisson_distribution<std::int64_t> dist(mean);
  return dist(rng);
}

std::int64_t binomial_draw(std::int64_t trials, double p, Rng& rng)
{
  if (trials <= 0 || p <= 0.0)
    return 0;
  if (p >= 1.0)
    return trials;
  std::binomial_distribution<std::int64_t> dist(trials, p);
  return dist(rng);
}

std::int64_t uniform_int(std::int64_t lo, std::int64_t hi, Rng& rng)
{
  std::uniform_int_distribution<std::int64_t> dist(lo, hi);
  return dist(rng);
}

std::vector<double> dirichlet_draw(std::span<const double> alpha, Rng& rng)
{
  std::vector<double> out(alpha.size());
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    out[i] = gamma_draw(alpha[i], 1.0, rng);
    total += out[i];
  }
  if (!(total > 0.0)) {
    // All gamma draws underflowed (tiny shapes); fall back to the largest
    // shape, which is where the mass concentrates in that limit.
    std::size_t best = 0;
    for (std::size_t i = 1; i < alpha.size(); ++i)
      if (alpha[i] > alpha[best])
        best = i;
    std::fill(out.begin(), out.end(), 0.0);
    out[best] = 1.0;
    return out;
  }
  for (double& v : out)
    v /= total;
  return out;
}

std::vector<std::int64_t> multinomial_draw(std::int64_t trials,
                                           std::span<const double> probs,
                                           Rng& rng)
{
  std::vector<std::int64_t> counts(probs.size(), 0);
  double remaining_mass = std::accumulate(probs.begin(), probs.end(), 0.0);
  std::int64_t remaining = trials;
  for (std::size_t i = 0; i < probs.size() && remaining > 0; ++i) {
    if (i + 1 == probs.size() || remaining_mass <= probs[i]) {
      counts[i] = remaining;
      remaining = 0;
      break;
    }
    double p = probs[i] / remaining_mass;
    counts[i] = binomial_draw(remaining, p, rng);
    remaining -= counts[i];
    remaining_mass -= probs[i];
  }
  return counts;
}

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng)
{
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i - 1), rng));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

}  // namespace ppsb
