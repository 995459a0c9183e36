#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ppsb/rng.hpp"

namespace ppsb {

/// Log density with gradient written into the second argument.
using LogDensityFn = std::function<double(std::span<const double>, std::span<double>)>;

/// Dual-averaging step-size adaptation (Nesterov primal-dual scheme with
/// the usual t0 = 10, gamma = 0.05, kappa = 0.75 constants).
class DualAveraging {
 public:
  DualAveraging(double initial_step, double target_accept);

  void restart(double step);
  /// Feeds one acceptance statistic; returns the next step size.
  double update(double accept_stat);
  double final_step() const;

 private:
  double target_;
  double mu_ = 0.0;
  double log_step_ = 0.0;
  double log_step_bar_ = 0.0;
  double h_bar_ = 0.0;
  double count_ = 0.0;
};

struct HmcSettings {
  int warmup = 1000;
  int samples = 1000;
  double target_accept = 0.8;
  /// Integration time per transition, jittered uniformly in [0.5, 1.5]x.
  double trajectory_length = 2.0;
  int max_steps = 256;
  /// Energy error (log-density units) that flags a transition as divergent.
  double divergence_threshold = 1000.0;
  /// Multiplies the adapted step size after warmup.
  double step_size_scale = 1.0;
  bool adapt_metric = true;
};

struct ChainResult {
  std::vector<std::vector<double>> draws;  // unconstrained, one per retained iteration
  std::vector<double> log_density;
  int divergences = 0;           // retained iterations only
  int warmup_divergences = 0;
  double step_size = 0.0;
  double mean_accept = 0.0;
  std::vector<double> inverse_metric;
};

/// Static-trajectory HMC with a diagonal metric, adapted in Stan-style
/// windows during warmup alongside the step size.
ChainResult run_hmc_chain(const LogDensityFn& log_density, std::vector<double> initial,
                          const HmcSettings& settings, Rng& rng);

}  // namespace ppsb
