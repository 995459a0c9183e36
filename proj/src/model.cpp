#include "ppsb/model.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "ppsb/size_models.hpp"

namespace ppsb {

std::string to_string(SizeModelKind kind)
{
  switch (kind) {
    case SizeModelKind::BayesianBootstrap: return "bb";
    case SizeModelKind::NegBin: return "negbin";
    case SizeModelKind::Lognormal: return "lognormal";
    case SizeModelKind::Known: return "known";
  }
  return "?";
}

PriorBlock PriorBlock::simulation_matched()
{
  PriorBlock p;
  p.coef_sd = 1.0;
  p.scale_family = ScalePrior::HalfNormal;
  p.sigma_beta_scale = 0.5;
  p.sigma_y_scale = 0.75;
  return p;
}

OutcomeModelSpec make_spec(OutcomeKind outcome, bool size_predictor, SizeModelKind size_model,
                           Parameterization parameterization)
{
  OutcomeModelSpec spec;
  spec.outcome = outcome;
  spec.size_model = size_model;
  spec.parameterization = parameterization;
  if (!size_predictor)
    spec.kind = OutcomeModelKind::ClusterIndsOnly;
  else
    spec.kind = outcome == OutcomeKind::Continuous ? OutcomeModelKind::ContinuousSlope
                                                   : OutcomeModelKind::BinaryIntercept;
  return spec;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Scale prior on sigma = exp(u) with the log-Jacobian; adds to lp and
/// returns d/du.
double scale_prior(double u, double scale, ScalePrior family, double& lp)
{
  const double sigma = std::exp(u);
  const double r = sigma / scale;
  if (family == ScalePrior::HalfCauchy) {
    lp += -std::log1p(r * r) + u;
    return -2.0 * r * r / (1.0 + r * r) + 1.0;
  }
  lp += -0.5 * r * r + u;
  return -r * r + 1.0;
}

}  // namespace

PosteriorModel::PosteriorModel(OutcomeModelSpec spec, const TwoStageSample& sample,
                               PriorBlock priors)
    : spec_(spec), priors_(priors)
{
  if (spec_.kind == OutcomeModelKind::ContinuousSlope && spec_.outcome != OutcomeKind::Continuous)
    throw std::invalid_argument("slope model needs a continuous outcome");
  if (spec_.kind == OutcomeModelKind::BinaryIntercept && spec_.outcome != OutcomeKind::Binary)
    throw std::invalid_argument("intercept-only logistic model needs a binary outcome");
  if (sample.outcome != spec_.outcome)
    throw std::invalid_argument("model outcome kind does not match the sample");
  if (sample.clusters.empty())
    throw std::invalid_argument("posterior needs at least one sampled cluster");

  const std::size_t js = sample.clusters.size();
  auto& L = layout_;
  L.js = js;
  int next = 0;
  auto add = [&](const std::string& name) {
    names_.push_back(name);
    return next++;
  };
  L.alpha0 = add("alpha0");
  if (spec_.uses_size_predictor())
    L.gamma0 = add("gamma0");
  if (spec_.has_slope()) {
    L.alpha1 = add("alpha1");
    if (spec_.uses_size_predictor())
      L.gamma1 = add("gamma1");
  }
  L.sigma_beta0 = add("sigma_beta0");
  if (spec_.has_slope()) {
    L.sigma_beta1 = add("sigma_beta1");
    L.sigma_y = add("sigma_y");
  }
  L.beta0 = next;
  for (std::size_t j = 0; j < js; ++j)
    add("beta0[" + std::to_string(j + 1) + "]");
  if (spec_.has_slope()) {
    L.beta1 = next;
    for (std::size_t j = 0; j < js; ++j)
      add("beta1[" + std::to_string(j + 1) + "]");
  }
  if (spec_.size_model == SizeModelKind::NegBin) {
    L.size_a = add("nb_mean");
    L.size_b = add("nb_cv");
  } else if (spec_.size_model == SizeModelKind::Lognormal) {
    L.size_a = add("ln_mu");
    L.size_b = add("ln_tau");
  }
  L.dimension = static_cast<std::size_t>(next);

  observed_sizes_ = sample.observed_sizes();
  observed_sizes_real_ = as_doubles(observed_sizes_);
  log_center_ = mean_log_size(observed_sizes_real_);
  logc_ = centered_log_sizes(observed_sizes_real_, observed_sizes_real_);

  stats_.resize(js);
  for (std::size_t j = 0; j < js; ++j) {
    const auto& c = sample.clusters[j];
    auto& st = stats_[j];
    st.n = static_cast<double>(c.n());
    st.ysum = std::accumulate(c.y.begin(), c.y.end(), 0.0);
    st.ybar = st.ysum / st.n;
    st.xbar = std::accumulate(c.x.begin(), c.x.end(), 0.0) / st.n;
    for (std::size_t i = 0; i < c.n(); ++i) {
      const double dy = c.y[i] - st.ybar;
      const double dx = c.x[i] - st.xbar;
      st.cyy += dy * dy;
      st.cxy += dx * dy;
      st.cxx += dx * dx;
    }
  }

  negbin_mean_center_ = std::log(static_cast<double>(sample.N) / static_cast<double>(sample.J));
  negbin_small_ = js <= priors_.negbin_small_js;

  std_center_ = log_center_;
  std_scale_ = 1.0;
  if (js >= 2) {
    double ss = 0.0;
    for (double v : logc_)
      ss += v * v;
    const double sd = std::sqrt(ss / static_cast<double>(js - 1));
    if (sd > 1e-8)
      std_scale_ = sd;
  }
}

double PosteriorModel::log_density(std::span<const double> u) const
{
  std::vector<double> scratch(dimension());
  return log_density(u, scratch);
}

double PosteriorModel::log_density(std::span<const double> u, std::span<double> g) const
{
  const auto& L = layout_;
  std::fill(g.begin(), g.end(), 0.0);
  double lp = 0.0;

  const double coef_var = priors_.coef_sd * priors_.coef_sd;
  auto coef = [&](int idx) {
    if (idx < 0)
      return 0.0;
    const double v = u[idx];
    lp += -0.5 * v * v / coef_var;
    g[idx] += -v / coef_var;
    return v;
  };
  const double a0 = coef(L.alpha0);
  const double g0 = coef(L.gamma0);
  const double a1 = coef(L.alpha1);
  const double g1 = coef(L.gamma1);

  auto scale = [&](int idx, double prior_scale) {
    if (idx < 0)
      return 0.0;
    g[idx] += scale_prior(u[idx], prior_scale, priors_.scale_family, lp);
    return std::exp(u[idx]);
  };
  const double s0 = scale(L.sigma_beta0, priors_.sigma_beta_scale);
  const double s1 = scale(L.sigma_beta1, priors_.sigma_beta_scale);
  const double sy = scale(L.sigma_y, priors_.sigma_y_scale);

  const std::size_t js = L.js;
  const bool centered = spec_.parameterization == Parameterization::Centered;
  std::vector<double> b0(js), b1(js), db0(js, 0.0), db1(js, 0.0);

  auto effects = [&](int start, int a_idx, int g_idx, int s_idx, double a, double gm, double s,
                     std::vector<double>& b) {
    for (std::size_t j = 0; j < js; ++j) {
      const int idx = start + static_cast<int>(j);
      const double mean = a + gm * logc_[j];
      if (centered) {
        b[j] = u[idx];
        const double r = (b[j] - mean) / s;
        lp += -0.5 * r * r - std::log(s);
        g[idx] += -r / s;
        g[a_idx] += r / s;
        if (g_idx >= 0)
          g[g_idx] += r / s * logc_[j];
        g[s_idx] += r * r - 1.0;
      } else {
        const double z = u[idx];
        b[j] = mean + s * z;
        lp += -0.5 * z * z;
        g[idx] += -z;
      }
    }
  };
  effects(L.beta0, L.alpha0, L.gamma0, L.sigma_beta0, a0, g0, s0, b0);
  if (spec_.has_slope())
    effects(L.beta1, L.alpha1, L.gamma1, L.sigma_beta1, a1, g1, s1, b1);

  if (spec_.has_slope()) {
    const double inv_var = 1.0 / (sy * sy);
    for (std::size_t j = 0; j < js; ++j) {
      const auto& st = stats_[j];
      const double d = st.ybar - b0[j] - b1[j] * st.xbar;
      const double ss = st.cyy - 2.0 * b1[j] * st.cxy + b1[j] * b1[j] * st.cxx + st.n * d * d;
      lp += -st.n * u[L.sigma_y] - 0.5 * ss * inv_var;
      g[L.sigma_y] += -st.n + ss * inv_var;
      db0[j] += st.n * d * inv_var;
      db1[j] += (st.cxy - b1[j] * st.cxx + st.n * d * st.xbar) * inv_var;
    }
  } else {
    for (std::size_t j = 0; j < js; ++j) {
      const auto& st = stats_[j];
      const double b = b0[j];
      // log(1 + e^b), stable for both signs.
      const double softplus = b > 0 ? b + std::log1p(std::exp(-b)) : std::log1p(std::exp(b));
      lp += st.ysum * b - st.n * softplus;
      const double p = 1.0 / (1.0 + std::exp(-b));
      db0[j] += st.ysum - st.n * p;
    }
  }

  auto push_effects = [&](int start, int a_idx, int g_idx, int s_idx, double s,
                          const std::vector<double>& db) {
    for (std::size_t j = 0; j < js; ++j) {
      const int idx = start + static_cast<int>(j);
      if (centered) {
        g[idx] += db[j];
      } else {
        g[idx] += db[j] * s;
        g[a_idx] += db[j];
        if (g_idx >= 0)
          g[g_idx] += db[j] * logc_[j];
        g[s_idx] += db[j] * s * u[idx];
      }
    }
  };
  push_effects(L.beta0, L.alpha0, L.gamma0, L.sigma_beta0, s0, db0);
  if (spec_.has_slope())
    push_effects(L.beta1, L.alpha1, L.gamma1, L.sigma_beta1, s1, db1);

  if (spec_.size_model == SizeModelKind::NegBin) {
    const double um = u[L.size_a];
    const double uc = u[L.size_b];
    const double m = std::exp(um);
    const double cv = std::exp(uc);
    const double cv2 = cv * cv;
    const double k = 1.0 / cv2;
    const double p = 1.0 / (1.0 + m * cv2);
    if (!(k > 0.0) || !std::isfinite(k) || !(p > 0.0 && p < 1.0))
      return kNegInf;
    const auto lik = negbin_size_loglik_grad(observed_sizes_, k, p);
    lp += lik.value;
    const double dp_dum = -m * cv2 * p * p;
    const double dp_duc = -2.0 * m * cv2 * p * p;
    g[L.size_a] += lik.d_second * dp_dum;
    g[L.size_b] += lik.d_first * (-2.0 * k) + lik.d_second * dp_duc;

    const double zm = (um - negbin_mean_center_) / priors_.negbin_log_mean_sd;
    lp += -0.5 * zm * zm;
    g[L.size_a] += -zm / priors_.negbin_log_mean_sd;
    if (negbin_small_) {
      lp += -priors_.negbin_cv_rate * cv + uc;
      g[L.size_b] += -priors_.negbin_cv_rate * cv + 1.0;
    } else {
      g[L.size_b] += scale_prior(uc, priors_.negbin_cv_scale, ScalePrior::HalfCauchy, lp);
    }
  } else if (spec_.size_model == SizeModelKind::Lognormal) {
    const double mu_std = u[L.size_a];
    const double ut = u[L.size_b];
    const double mu = std_center_ + std_scale_ * mu_std;
    const double tau = std_scale_ * std::exp(ut);
    const auto lik = lognormal_size_loglik_grad(observed_sizes_real_, mu, tau);
    lp += lik.value;
    g[L.size_a] += lik.d_first * std_scale_;
    g[L.size_b] += lik.d_second * tau;
    const double msd = priors_.lognormal_mu_sd;
    lp += -0.5 * mu_std * mu_std / (msd * msd);
    g[L.size_a] += -mu_std / (msd * msd);
    g[L.size_b] += scale_prior(ut, priors_.lognormal_tau_scale, ScalePrior::HalfCauchy, lp);
  }

  if (!std::isfinite(lp))
    return kNegInf;
  return lp;
}

std::vector<double> PosteriorModel::constrain(std::span<const double> u) const
{
  const auto& L = layout_;
  std::vector<double> t(u.begin(), u.end());
  for (int idx : {L.sigma_beta0, L.sigma_beta1, L.sigma_y})
    if (idx >= 0)
      t[idx] = std::exp(u[idx]);
  if (spec_.parameterization == Parameterization::NonCentered) {
    for (std::size_t j = 0; j < L.js; ++j) {
      const int i0 = L.beta0 + static_cast<int>(j);
      const double g0 = L.gamma0 >= 0 ? u[L.gamma0] : 0.0;
      t[i0] = u[L.alpha0] + g0 * logc_[j] + t[L.sigma_beta0] * u[i0];
      if (L.beta1 >= 0) {
        const int i1 = L.beta1 + static_cast<int>(j);
        const double g1 = L.gamma1 >= 0 ? u[L.gamma1] : 0.0;
        t[i1] = u[L.alpha1] + g1 * logc_[j] + t[L.sigma_beta1] * u[i1];
      }
    }
  }
  if (spec_.size_model == SizeModelKind::NegBin) {
    t[L.size_a] = std::exp(u[L.size_a]);
    t[L.size_b] = std::exp(u[L.size_b]);
  } else if (spec_.size_model == SizeModelKind::Lognormal) {
    t[L.size_a] = std_center_ + std_scale_ * u[L.size_a];
    t[L.size_b] = std_scale_ * std::exp(u[L.size_b]);
  }
  return t;
}

std::vector<double> PosteriorModel::unconstrain(std::span<const double> theta) const
{
  const auto& L = layout_;
  std::vector<double> u(theta.begin(), theta.end());
  for (int idx : {L.sigma_beta0, L.sigma_beta1, L.sigma_y})
    if (idx >= 0)
      u[idx] = std::log(theta[idx]);
  if (spec_.parameterization == Parameterization::NonCentered) {
    for (std::size_t j = 0; j < L.js; ++j) {
      const int i0 = L.beta0 + static_cast<int>(j);
      const double g0 = L.gamma0 >= 0 ? theta[L.gamma0] : 0.0;
      u[i0] = (theta[i0] - theta[L.alpha0] - g0 * logc_[j]) / theta[L.sigma_beta0];
      if (L.beta1 >= 0) {
        const int i1 = L.beta1 + static_cast<int>(j);
        const double g1 = L.gamma1 >= 0 ? theta[L.gamma1] : 0.0;
        u[i1] = (theta[i1] - theta[L.alpha1] - g1 * logc_[j]) / theta[L.sigma_beta1];
      }
    }
  }
  if (spec_.size_model == SizeModelKind::NegBin) {
    u[L.size_a] = std::log(theta[L.size_a]);
    u[L.size_b] = std::log(theta[L.size_b]);
  } else if (spec_.size_model == SizeModelKind::Lognormal) {
    u[L.size_a] = (theta[L.size_a] - std_center_) / std_scale_;
    u[L.size_b] = std::log(theta[L.size_b] / std_scale_);
  }
  return u;
}

std::vector<double> PosteriorModel::initial_point(Rng& rng) const
{
  std::vector<double> u(dimension());
  for (auto& v : u)
    v = -2.0 + 4.0 * uniform01(rng);
  if (spec_.size_model == SizeModelKind::NegBin)
    u[layout_.size_a] = negbin_mean_center_ + (uniform01(rng) - 0.5);
  return u;
}

}  // namespace ppsb
