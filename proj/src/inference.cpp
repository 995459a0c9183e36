#include "ppsb/inference.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "ppsb/size_models.hpp"

namespace ppsb {

ChainValues PosteriorDraws::column(std::size_t param) const
{
  ChainValues out(chains, std::vector<double>(per_chain));
  for (std::size_t d = 0; d < values.size(); ++d)
    out[d / per_chain][d % per_chain] = values[d][param];
  return out;
}

Diagnostics compute_diagnostics(const PosteriorDraws& draws)
{
  Diagnostics diag;
  diag.names = draws.names;
  for (std::size_t k = 0; k < draws.names.size(); ++k) {
    auto col = draws.column(k);
    diag.rhat.push_back(split_rhat(col));
    diag.ess.push_back(effective_sample_size(col));
  }
  return diag;
}

namespace {

struct RunOutcome {
  PosteriorDraws draws;
  int divergences = 0;
};

RunOutcome run_once(const PosteriorModel& model, const SamplerSchedule& schedule, int warmup,
                    int samples, double step_scale, std::uint64_t seed)
{
  HmcSettings hmc = schedule.hmc;
  hmc.warmup = warmup;
  hmc.samples = samples;
  hmc.step_size_scale = schedule.hmc.step_size_scale * step_scale;
  LogDensityFn f = [&model](std::span<const double> u, std::span<double> g) {
    return model.log_density(u, g);
  };

  RunOutcome out;
  out.draws.names = model.parameter_names();
  out.draws.chains = static_cast<std::size_t>(schedule.chains);
  out.draws.per_chain = static_cast<std::size_t>(samples);
  out.draws.values.reserve(out.draws.chains * out.draws.per_chain);
  for (int c = 0; c < schedule.chains; ++c) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(c));
    std::vector<double> init;
    for (int attempt = 0; attempt < 100; ++attempt) {
      init = model.initial_point(rng);
      if (std::isfinite(model.log_density(init)))
        break;
    }
    auto chain = run_hmc_chain(f, init, hmc, rng);
    out.divergences += chain.divergences;
    for (const auto& u : chain.draws)
      out.draws.values.push_back(model.constrain(u));
  }
  return out;
}

}  // namespace

FitResult run_chains(const OutcomeModelSpec& spec, const TwoStageSample& sample,
                     const PriorBlock& priors, const SamplerSchedule& schedule,
                     std::uint64_t seed)
{
  if (schedule.chains < 2)
    throw std::invalid_argument("R-hat needs at least two chains");
  if (schedule.warmup < 1 || schedule.samples < 4)
    throw std::invalid_argument("sampler needs warmup >= 1 and samples >= 4");

  FitResult fit;
  OutcomeModelSpec current = spec;
  int warmup = schedule.warmup;
  int samples = schedule.samples;
  int halvings = 0;

  for (int run = 0;; ++run) {
    PosteriorModel model(current, sample, priors);
    const double scale = std::ldexp(1.0, -halvings);
    auto outcome = run_once(model, schedule, warmup, samples, scale,
                            derive_seed(seed, static_cast<std::uint64_t>(run)));
    fit.runs = run + 1;
    fit.draws = std::move(outcome.draws);
    fit.diagnostics = compute_diagnostics(fit.draws);
    fit.diagnostics.divergences = outcome.divergences;
    fit.iterations_per_chain = warmup + samples;
    fit.parameterization = current.parameterization;
    fit.step_size_scale = scale;
    fit.spec = current;

    if (outcome.divergences > 0) {
      if (!schedule.escalate) {
        fit.failure = "divergent transitions";
        return fit;
      }
      if (halvings < schedule.max_step_halvings) {
        ++halvings;
        continue;
      }
      if (current.parameterization == Parameterization::Centered) {
        current.parameterization = Parameterization::NonCentered;
        halvings = 0;
        continue;
      }
      fit.failure = "divergent transitions persist after escalation";
      return fit;
    }

    const double rhat = fit.diagnostics.max_rhat();
    const bool mixed = !std::isnan(rhat) && rhat < schedule.rhat_threshold;
    if (mixed) {
      fit.converged = true;
      return fit;
    }
    const int next_total = warmup + samples + schedule.iteration_step;
    if (!schedule.escalate || next_total > schedule.max_iterations) {
      fit.failure = "R-hat >= " + std::to_string(schedule.rhat_threshold) + " after " +
                    std::to_string(warmup + samples) + " iterations";
      return fit;
    }
    warmup = next_total / 2;
    samples = next_total - warmup;
  }
}

NonsampledSizeSampler make_size_sampler(const PosteriorModel& model, const TwoStageSample& sample,
                                        std::vector<std::int64_t> known)
{
  const auto J = sample.J;
  const auto Js = sample.Js;
  const auto N = sample.N;
  const auto& L = model.layout();
  switch (model.spec().size_model) {
    case SizeModelKind::Known:
      if (known.size() != J - Js)
        throw std::invalid_argument("known sizes must cover every nonsampled cluster");
      return [known = std::move(known)](std::span<const double>, Rng&) { return known; };
    case SizeModelKind::BayesianBootstrap: {
      auto obs = ObservedSizes::from_sample(sample);
      return [obs](std::span<const double>, Rng& rng) { return bb_posterior_nonsampled(obs, rng); };
    }
    case SizeModelKind::NegBin: {
      const int a = L.size_a, b = L.size_b;
      return [=](std::span<const double> draw, Rng& rng) {
        const double m = draw[a];
        const double cv = draw[b];
        NegBinParams params{1.0 / (cv * cv), 1.0 / (1.0 + m * cv * cv)};
        return rejection_sample_nonsampled(params, J, Js, N, rng);
      };
    }
    case SizeModelKind::Lognormal: {
      const int a = L.size_a, b = L.size_b;
      return [=](std::span<const double> draw, Rng& rng) {
        LognormalParams params{draw[a], draw[b]};
        return rejection_sample_nonsampled(params, J, Js, N, rng);
      };
    }
  }
  throw std::logic_error("unknown size model");
}

YbarPrediction predict_ybar(const PosteriorModel& model, const PosteriorDraws& draws,
                            const TwoStageSample& sample, const NonsampledSizeSampler& sizes,
                            Rng& rng, const PredictionOptions& options)
{
  const auto& L = model.layout();
  const bool continuous = model.spec().has_slope();
  const double N = static_cast<double>(sample.N);
  const double center = model.log_size_center();
  const auto nonsampled = sample.nonsampled_ids();

  struct Sampled {
    double n, size, ysum, xbar_exc;
  };
  std::vector<Sampled> sampled;
  double observed_total = 0.0;
  for (const auto& c : sample.clusters) {
    Sampled s{static_cast<double>(c.n()), static_cast<double>(c.size),
              std::accumulate(c.y.begin(), c.y.end(), 0.0), 0.0};
    if (c.size > static_cast<std::int64_t>(c.n())) {
      const double xs = std::accumulate(c.x.begin(), c.x.end(), 0.0);
      s.xbar_exc = (s.size * c.xbar - xs) / (s.size - s.n);
    }
    observed_total += s.size;
    sampled.push_back(s);
  }

  auto get = [](std::span<const double> d, int idx) { return idx >= 0 ? d[idx] : 0.0; };
  auto logistic = [](double b) { return 1.0 / (1.0 + std::exp(-b)); };

  YbarPrediction out;
  out.ybar.reserve(draws.size());
  double discrepancy = 0.0;
  for (const auto& d : draws.values) {
    std::span<const double> draw(d);
    const double a0 = get(draw, L.alpha0), g0 = get(draw, L.gamma0);
    const double a1 = get(draw, L.alpha1), g1 = get(draw, L.gamma1);
    const double s0 = get(draw, L.sigma_beta0), s1 = get(draw, L.sigma_beta1);
    const double sy = get(draw, L.sigma_y);

    double total = 0.0;
    for (std::size_t j = 0; j < sampled.size(); ++j) {
      const auto& s = sampled[j];
      const double remaining = s.size - s.n;
      const double b0 = draw[L.beta0 + static_cast<int>(j)];
      if (continuous) {
        const double b1 = draw[L.beta1 + static_cast<int>(j)];
        double exc = 0.0;
        if (remaining > 0.0) {
          exc = b0 + b1 * s.xbar_exc;
          if (!options.plugin_approximation)
            exc += sy / std::sqrt(remaining) * std_normal(rng);
        }
        total += s.ysum + remaining * exc;
      } else {
        const double p = logistic(b0);
        const double exc = options.plugin_approximation
                               ? remaining * p
                               : static_cast<double>(binomial_draw(
                                     static_cast<std::int64_t>(remaining), p, rng));
        total += s.ysum + exc;
      }
    }

    auto drawn = sizes(draw, rng);
    if (drawn.size() != nonsampled.size())
      throw std::runtime_error("size sampler returned the wrong number of clusters");
    double drawn_total = 0.0;
    for (std::size_t k = 0; k < drawn.size(); ++k) {
      const double size = static_cast<double>(drawn[k]);
      drawn_total += size;
      const double c = std::log(size) - center;
      const double b0 = a0 + g0 * c + s0 * std_normal(rng);
      if (continuous) {
        const double b1 = a1 + g1 * c + s1 * std_normal(rng);
        const double mean = b0 + b1 * sample.xbar_all[nonsampled[k]];
        total += size * (mean + sy / std::sqrt(size) * std_normal(rng));
      } else {
        total += static_cast<double>(binomial_draw(drawn[k], logistic(b0), rng));
      }
    }
    discrepancy += (observed_total + drawn_total - N) / N;
    out.ybar.push_back(total / N);
  }
  out.mean_size_discrepancy = draws.size() ? discrepancy / static_cast<double>(draws.size()) : 0.0;
  return out;
}

void write_draws(const PosteriorDraws& draws, std::ostream& out)
{
  out << "chain\titer\tparameter\tvalue\n";
  out << std::setprecision(17);
  for (std::size_t d = 0; d < draws.size(); ++d)
    for (std::size_t k = 0; k < draws.names.size(); ++k)
      out << draws.chain_of(d) << '\t' << draws.iteration_of(d) << '\t' << draws.names[k] << '\t'
          << draws.values[d][k] << '\n';
}

}  // namespace ppsb
