#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ppsb/design.hpp"
#include "ppsb/population.hpp"
#include "ppsb/rng.hpp"

namespace ppsb {

class SizeModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sizes of the PPS-sampled clusters with their unique values and counts.
struct ObservedSizes {
  std::vector<std::int64_t> sizes;
  std::int64_t N = 0;
  std::size_t J = 0;
  std::size_t Js = 0;
  std::vector<std::int64_t> unique;  // ascending
  std::vector<double> counts;        // multiplicity of each unique value

  static ObservedSizes from(std::vector<std::int64_t> sizes, std::int64_t N, std::size_t J);
  static ObservedSizes from_sample(const TwoStageSample& sample);
};

/// One posterior draw of the Bayesian bootstrap: psi ~ Dirichlet(counts),
/// psi_star_b proportional to psi_b (1 - pi_b) / pi_b with pi_b = Js N*_b / N,
/// and nonsampled counts ~ Multinomial(J - Js, psi_star).
struct BbDraw {
  std::vector<double> psi;
  std::vector<double> psi_star;
  std::vector<std::int64_t> nonsampled_counts;
};

BbDraw bb_draw(const ObservedSizes& obs, Rng& rng);

/// J - Js sizes for the nonsampled clusters, in random order.
std::vector<std::int64_t> bb_posterior_nonsampled(const ObservedSizes& obs, Rng& rng);

struct NegBinParams {
  double k = 1.0;  // shape
  double p = 0.5;  // success probability; mean k (1 - p) / p
};

struct LognormalParams {
  double mu = 0.0;
  double tau = 1.0;
};

/// log Pr(M = m) for M ~ NegBin(k, p), m = 0, 1, ...
double negbin_log_pmf(std::int64_t m, double k, double p);
/// log density of lognormal(mu, tau^2) at x > 0.
double lognormal_log_density(double x, double mu, double tau);

struct SizeLoglik {
  double value = 0.0;
  double d_first = 0.0;   // d/dk or d/dmu
  double d_second = 0.0;  // d/dp or d/dtau
};

/// Log-likelihood of PPS-observed sizes under a NegBin(k, p) population:
/// each observed size is 1 + W with W ~ NegBin(k + 1, p).
double negbin_size_loglik(std::span<const std::int64_t> observed, double k, double p);
SizeLoglik negbin_size_loglik_grad(std::span<const std::int64_t> observed, double k, double p);

/// Log-likelihood of PPS-observed sizes under a lognormal(mu, tau^2)
/// population: observed sizes are lognormal(mu + tau^2, tau^2).
double lognormal_size_loglik(std::span<const double> observed, double mu, double tau);
SizeLoglik lognormal_size_loglik_grad(std::span<const double> observed, double mu, double tau);

/// Gamma-Poisson draw from NegBin(k, p).
std::int64_t negbin_draw(const NegBinParams& params, Rng& rng);

using SizeCandidate = std::function<double(Rng&)>;

struct RejectionOptions {
  std::int64_t max_attempts = 20'000'000;
  std::int64_t check_after = 100'000;
  double min_acceptance = 1e-4;
};

struct RejectionStats {
  std::int64_t attempts = 0;
  std::int64_t accepted = 0;
};

/// Draws J - Js sizes from p(N_j | I_j = 0): candidates from the population
/// law (rounded, floor 1) accepted with probability max(0, 1 - Js N_j / N).
std::vector<std::int64_t> rejection_sample_nonsampled(const SizeCandidate& candidate,
                                                      std::size_t J, std::size_t Js,
                                                      std::int64_t N, Rng& rng,
                                                      const RejectionOptions& options = {},
                                                      RejectionStats* stats = nullptr);
std::vector<std::int64_t> rejection_sample_nonsampled(const NegBinParams& params, std::size_t J,
                                                      std::size_t Js, std::int64_t N, Rng& rng,
                                                      const RejectionOptions& options = {});
std::vector<std::int64_t> rejection_sample_nonsampled(const LognormalParams& params,
                                                      std::size_t J, std::size_t Js,
                                                      std::int64_t N, Rng& rng,
                                                      const RejectionOptions& options = {});

/// True sizes of the nonsampled clusters, in ascending cluster id.
std::vector<std::int64_t> known_sizes(const FinitePopulation& pop, const TwoStageSample& sample);

}  // namespace ppsb
