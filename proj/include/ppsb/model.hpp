#pragma once

#include <span>
#include <string>
#include <vector>

#include "ppsb/design.hpp"
#include "ppsb/rng.hpp"

namespace ppsb {

enum class OutcomeModelKind { ContinuousSlope, BinaryIntercept, ClusterIndsOnly };
enum class SizeModelKind { BayesianBootstrap, NegBin, Lognormal, Known };
enum class Parameterization { Centered, NonCentered };
enum class ScalePrior { HalfCauchy, HalfNormal };

std::string to_string(SizeModelKind kind);

/// Weakly informative defaults; every scale is a standard deviation.
struct PriorBlock {
  double coef_sd = 10.0;
  ScalePrior scale_family = ScalePrior::HalfCauchy;
  double sigma_beta_scale = 2.5;
  double sigma_y_scale = 2.5;
  // Lognormal size model, on the standardized log-size scale.
  double lognormal_mu_sd = 10.0;
  double lognormal_tau_scale = 2.5;
  // NegBin size model in (mean, CV) form; CV is 1 / sqrt(gamma shape).
  double negbin_log_mean_sd = 2.0;
  std::size_t negbin_small_js = 20;
  double negbin_cv_rate = 1.0;   // exponential prior on CV when Js <= negbin_small_js
  double negbin_cv_scale = 2.5;  // half-Cauchy prior on CV otherwise

  /// Normal(0, 1) coefficients and half-normal scales (0.5, 0.75), i.e. the
  /// simulation hyperprior.
  static PriorBlock simulation_matched();
};

struct OutcomeModelSpec {
  OutcomeModelKind kind = OutcomeModelKind::ContinuousSlope;
  OutcomeKind outcome = OutcomeKind::Continuous;
  SizeModelKind size_model = SizeModelKind::Known;
  Parameterization parameterization = Parameterization::Centered;

  bool has_slope() const { return outcome == OutcomeKind::Continuous; }
  bool uses_size_predictor() const { return kind != OutcomeModelKind::ClusterIndsOnly; }
  bool has_size_parameters() const
  {
    return size_model == SizeModelKind::NegBin || size_model == SizeModelKind::Lognormal;
  }
};

OutcomeModelSpec make_spec(OutcomeKind outcome, bool size_predictor, SizeModelKind size_model,
                           Parameterization parameterization = Parameterization::Centered);

/// Positions of each parameter; -1 when absent. Constrained and
/// unconstrained vectors share the layout.
struct ParameterLayout {
  int alpha0 = -1, gamma0 = -1, alpha1 = -1, gamma1 = -1;
  int sigma_beta0 = -1, sigma_beta1 = -1, sigma_y = -1;
  int beta0 = -1, beta1 = -1;  // first of js entries
  int size_a = -1, size_b = -1;
  std::size_t js = 0;
  std::size_t dimension = 0;
};

/// Joint posterior of outcome-model and size-model parameters given a
/// two-stage sample. Scales are log-transformed; in the non-centered form the
/// cluster effects are standard-normal innovations.
class PosteriorModel {
 public:
  PosteriorModel(OutcomeModelSpec spec, const TwoStageSample& sample, PriorBlock priors = {});

  const OutcomeModelSpec& spec() const { return spec_; }
  const PriorBlock& priors() const { return priors_; }
  const ParameterLayout& layout() const { return layout_; }
  std::size_t dimension() const { return layout_.dimension; }
  const std::vector<std::string>& parameter_names() const { return names_; }

  /// Centered log sizes of the sampled clusters and the centering constant
  /// (mean log size over sampled clusters).
  const std::vector<double>& log_size_predictor() const { return logc_; }
  double log_size_center() const { return log_center_; }

  /// Log density on the unconstrained scale (Jacobian included) and its
  /// gradient. Returns -inf outside the support of floating point.
  double log_density(std::span<const double> u, std::span<double> grad) const;
  double log_density(std::span<const double> u) const;

  std::vector<double> constrain(std::span<const double> u) const;
  std::vector<double> unconstrain(std::span<const double> theta) const;

  std::vector<double> initial_point(Rng& rng) const;

 private:
  struct ClusterStats {
    double n = 0.0;
    double ybar = 0.0, xbar = 0.0;
    double cyy = 0.0, cxy = 0.0, cxx = 0.0;
    double ysum = 0.0;
  };

  OutcomeModelSpec spec_;
  PriorBlock priors_;
  ParameterLayout layout_;
  std::vector<std::string> names_;
  std::vector<ClusterStats> stats_;
  std::vector<double> logc_;
  double log_center_ = 0.0;
  std::vector<std::int64_t> observed_sizes_;
  std::vector<double> observed_sizes_real_;
  double negbin_mean_center_ = 0.0;
  bool negbin_small_ = false;
  double std_center_ = 0.0;  // lognormal standardization
  double std_scale_ = 1.0;
};

}  // namespace ppsb
