#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ppsb/design.hpp"
#include "ppsb/diagnostics.hpp"
#include "ppsb/hmc.hpp"
#include "ppsb/model.hpp"

namespace ppsb {

/// Chain counts and the escalation ladder. Iteration counts are per chain;
/// escalation adds `iteration_step` (split evenly between warmup and
/// sampling) until R-hat < threshold or `max_iterations` is reached.
/// Divergences first shrink the adapted step size, then switch to the
/// non-centered form.
struct SamplerSchedule {
  int chains = 4;
  int warmup = 1000;
  int samples = 1000;
  bool escalate = true;
  int iteration_step = 1000;
  int max_iterations = 4000;
  double rhat_threshold = 1.1;
  int max_step_halvings = 2;
  HmcSettings hmc;
};

/// Retained draws on the constrained scale, chain-major.
struct PosteriorDraws {
  std::vector<std::string> names;
  std::size_t chains = 0;
  std::size_t per_chain = 0;
  std::vector<std::vector<double>> values;

  std::size_t size() const { return values.size(); }
  int chain_of(std::size_t draw) const { return static_cast<int>(draw / per_chain); }
  int iteration_of(std::size_t draw) const { return static_cast<int>(draw % per_chain); }
  ChainValues column(std::size_t param) const;
};

Diagnostics compute_diagnostics(const PosteriorDraws& draws);

struct FitResult {
  PosteriorDraws draws;
  Diagnostics diagnostics;
  bool converged = false;
  std::string failure;
  int iterations_per_chain = 0;
  int runs = 0;
  Parameterization parameterization = Parameterization::Centered;
  double step_size_scale = 1.0;
  /// Model actually used for the returned draws (the parameterization may
  /// have been switched).
  OutcomeModelSpec spec;
};

/// Runs the chains of one model fit with the escalation ladder.
FitResult run_chains(const OutcomeModelSpec& spec, const TwoStageSample& sample,
                     const PriorBlock& priors, const SamplerSchedule& schedule,
                     std::uint64_t seed);

/// Sizes for the J - Js nonsampled clusters under one retained draw.
using NonsampledSizeSampler =
    std::function<std::vector<std::int64_t>(std::span<const double> draw, Rng& rng)>;

struct PredictionOptions {
  /// Replace the predictive noise of nonsampled-unit means in sampled
  /// clusters by their expectation.
  bool plugin_approximation = false;
};

struct YbarPrediction {
  std::vector<double> ybar;
  /// Mean over draws of (observed + drawn sizes - N) / N.
  double mean_size_discrepancy = 0.0;
};

/// Posterior predictive draws of the finite-population mean, one per
/// retained draw. Nonsampled clusters get fresh cluster effects from the
/// hierarchical model at their drawn sizes and known x means.
YbarPrediction predict_ybar(const PosteriorModel& model, const PosteriorDraws& draws,
                            const TwoStageSample& sample, const NonsampledSizeSampler& sizes,
                            Rng& rng, const PredictionOptions& options = {});

/// Size sampler for the model's size component; `known` is used for
/// SizeModelKind::Known and ignored otherwise.
NonsampledSizeSampler make_size_sampler(const PosteriorModel& model, const TwoStageSample& sample,
                                        std::vector<std::int64_t> known = {});

/// Tab-separated chain, iter, parameter, value.
void write_draws(const PosteriorDraws& draws, std::ostream& out);

}  // namespace ppsb
