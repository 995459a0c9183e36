#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ppsb {

using Rng = std::mt19937_64;

/// Child seed for stream `index` of `parent`. Mixing is the splitmix64
/// finalizer, so neighbouring indices give unrelated streams.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

inline Rng make_rng(std::uint64_t parent, std::uint64_t index)
{
  return Rng(derive_seed(parent, index));
}

/// Uniform on the open interval (0, 1).
double uniform01(Rng& rng);
double std_normal(Rng& rng);
/// |N(0, scale^2)|.
double half_normal(double scale, Rng& rng);
double gamma_draw(double shape, double scale, Rng& rng);
std::int64_t poisson_draw(double mean, Rng& rng);
std::int64_t binomial_draw(std::int64_t trials, double p, Rng& rng);
/// Uniform integer in [lo, hi].
std::int64_t uniform_int(std::int64_t lo, std::int64_t hi, Rng& rng);

std::vector<double> dirichlet_draw(std::span<const double> alpha, Rng& rng);
/// Sequential-binomial multinomial; `probs` need not be normalized.
std::vector<std::int64_t> multinomial_draw(std::int64_t trials,
                                           std::span<const double> probs,
                                           Rng& rng);

/// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

}  // namespace ppsb
