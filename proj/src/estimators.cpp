#include "ppsb/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ppsb {

Interval normal_interval(double point, double variance, double z)
{
  double half = z * std::sqrt(std::max(variance, 0.0));
  return {point - half, point + half};
}

namespace {

struct Fit {
  double intercept = 0.0;
  double slope = 0.0;
};

void require_probabilities(const TwoStageSample& s)
{
  if (s.clusters.empty())
    throw EstimationError("empty sample");
  for (const auto& c : s.clusters) {
    if (!(c.pi > 0.0) || !(c.pi_within > 0.0) || !(c.unit_weight > 0.0) || c.n() == 0)
      throw EstimationError("inclusion probabilities must be positive");
  }
}

double weighted_total(const TwoStageSample& s, double& weight_sum)
{
  double num = 0.0;
  weight_sum = 0.0;
  for (const auto& c : s.clusters) {
    num += c.unit_weight * std::accumulate(c.y.begin(), c.y.end(), 0.0);
    weight_sum += c.unit_weight * static_cast<double>(c.n());
  }
  return num;
}

double hajek_point(const TwoStageSample& s)
{
  double denom = 0.0;
  double num = weighted_total(s, denom);
  if (!(denom > 0.0))
    throw EstimationError("Hajek denominator is zero");
  return num / denom;
}

Fit greg_fit(const TwoStageSample& s, const EstimatorOptions& options)
{
  double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
  for (const auto& c : s.clusters) {
    const double w = c.unit_weight;
    for (std::size_t i = 0; i < c.n(); ++i) {
      sw += w;
      swx += w * c.x[i];
      swy += w * c.y[i];
      swxx += w * c.x[i] * c.x[i];
      swxy += w * c.x[i] * c.y[i];
    }
  }
  Fit fit;
  if (options.greg_fixed_slope) {
    fit.slope = *options.greg_fixed_slope;
    fit.intercept = (swy - fit.slope * swx) / sw;
    return fit;
  }
  const double xm = swx / sw;
  const double sxx = swxx - sw * xm * xm;
  if (!(sxx > 1e-12 * std::max(1.0, swxx)))
    throw EstimationError("GREG: covariate is constant in the sample (rank deficient)");
  fit.slope = (swxy - xm * swy) / sxx;
  fit.intercept = swy / sw - fit.slope * xm;
  return fit;
}

/// Residuals of the estimator's linearization, per sampled cluster.
std::vector<std::vector<double>> linearized(const TwoStageSample& s, DesignEstimator kind,
                                            const EstimatorOptions& options)
{
  std::vector<std::vector<double>> e(s.clusters.size());
  if (kind == DesignEstimator::Hajek) {
    double denom = 0.0;
    double r = weighted_total(s, denom) / denom;
    for (std::size_t k = 0; k < s.clusters.size(); ++k)
      for (double y : s.clusters[k].y)
        e[k].push_back((y - r) / denom);
  } else {
    auto fit = greg_fit(s, options);
    const double N = static_cast<double>(s.N);
    for (std::size_t k = 0; k < s.clusters.size(); ++k) {
      const auto& c = s.clusters[k];
      for (std::size_t i = 0; i < c.n(); ++i)
        e[k].push_back((c.y[i] - fit.intercept - fit.slope * c.x[i]) / N);
    }
  }
  return e;
}

double sample_variance(const std::vector<double>& v)
{
  if (v.size() < 2)
    return 0.0;
  double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double a : v)
    ss += (a - m) * (a - m);
  return ss / static_cast<double>(v.size() - 1);
}

DesignEstimate finish(double point, std::optional<VarianceBreakdown> variance)
{
  DesignEstimate est;
  est.point = point;
  est.variance = variance;
  if (variance) {
    est.ci50 = normal_interval(point, variance->total, kZ50);
    est.ci95 = normal_interval(point, variance->total, kZ95);
  }
  return est;
}

}  // namespace

std::optional<VarianceBreakdown> design_variance(const TwoStageSample& s, DesignEstimator kind,
                                                 const EstimatorOptions& options)
{
  require_probabilities(s);
  const std::size_t m = s.clusters.size();
  if (m < 2)
    return std::nullopt;
  if (kind == DesignEstimator::Greg && s.outcome != OutcomeKind::Continuous)
    throw EstimationError("GREG is only defined for continuous outcomes");

  auto e = linearized(s, kind, options);
  const bool subsample = s.unit_count() > options.subsample_cap;
  Rng rng = make_rng(options.subsample_seed, 0x5ab5);

  double mean_z = 0.0;
  std::vector<double> z(m);
  double second = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const auto& c = s.clusters[k];
    const double Nj = static_cast<double>(c.size);
    const double nj = static_cast<double>(c.n());
    double t = std::accumulate(e[k].begin(), e[k].end(), 0.0) / c.pi_within;
    // t / p_j with single-draw probability p_j = pi_j / m.
    z[k] = t * static_cast<double>(m) / c.pi;
    mean_z += z[k];

    double s2 = 0.0;
    if (subsample && static_cast<std::int64_t>(e[k].size()) > options.subsample_units) {
      auto pick = srs_within(static_cast<std::int64_t>(e[k].size()), options.subsample_units, rng);
      std::vector<double> sub;
      sub.reserve(pick.size());
      for (auto i : pick)
        sub.push_back(e[k][i]);
      s2 = sample_variance(sub);
    } else {
      s2 = sample_variance(e[k]);
    }
    const double vj = Nj * Nj * (1.0 - c.pi_within) * s2 / nj;
    second += vj / c.pi;
  }
  mean_z /= static_cast<double>(m);
  double ss = 0.0;
  for (double v : z)
    ss += (v - mean_z) * (v - mean_z);
  const double hh = ss / (static_cast<double>(m) * static_cast<double>(m - 1));

  VarianceBreakdown out;
  out.second_stage = second;
  out.total = std::max(hh, second);
  out.first_stage = out.total - second;
  return out;
}

DesignEstimate hajek(const TwoStageSample& sample, const EstimatorOptions& options)
{
  require_probabilities(sample);
  return finish(hajek_point(sample), design_variance(sample, DesignEstimator::Hajek, options));
}

DesignEstimate greg(const TwoStageSample& sample, const EstimatorOptions& options)
{
  require_probabilities(sample);
  if (sample.outcome != OutcomeKind::Continuous)
    throw EstimationError("GREG is only defined for continuous outcomes");
  auto fit = greg_fit(sample, options);
  const double N = static_cast<double>(sample.N);
  double correction = 0.0;
  for (const auto& c : sample.clusters)
    for (std::size_t i = 0; i < c.n(); ++i)
      correction += c.unit_weight * (c.y[i] - fit.intercept - fit.slope * c.x[i]);
  const double point = fit.intercept + fit.slope * sample.xbar_pop + correction / N;
  return finish(point, design_variance(sample, DesignEstimator::Greg, options));
}

}  // namespace ppsb
