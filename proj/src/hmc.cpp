#include "ppsb/hmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ppsb {

DualAveraging::DualAveraging(double initial_step, double target_accept) : target_(target_accept)
{
  restart(initial_step);
}

void DualAveraging::restart(double step)
{
  mu_ = std::log(10.0 * step);
  log_step_ = std::log(step);
  log_step_bar_ = 0.0;
  h_bar_ = 0.0;
  count_ = 0.0;
}

double DualAveraging::update(double accept_stat)
{
  constexpr double t0 = 10.0, gamma = 0.05, kappa = 0.75;
  count_ += 1.0;
  const double eta = 1.0 / (count_ + t0);
  h_bar_ = (1.0 - eta) * h_bar_ + eta * (target_ - accept_stat);
  log_step_ = mu_ - std::sqrt(count_) / gamma * h_bar_;
  const double w = std::pow(count_, -kappa);
  log_step_bar_ = w * log_step_ + (1.0 - w) * log_step_bar_;
  return std::exp(log_step_);
}

double DualAveraging::final_step() const
{
  return std::exp(log_step_bar_);
}

namespace {

struct Point {
  std::vector<double> q;
  std::vector<double> grad;
  double lp = 0.0;
};

class Integrator {
 public:
  Integrator(const LogDensityFn& f, std::size_t dim) : f_(f), p_(dim) {}

  double evaluate(Point& pt) const
  {
    pt.grad.assign(pt.q.size(), 0.0);
    pt.lp = f_(pt.q, pt.grad);
    if (!std::isfinite(pt.lp))
      pt.lp = -std::numeric_limits<double>::infinity();
    return pt.lp;
  }

  static double kinetic(const std::vector<double>& p, const std::vector<double>& inv_metric)
  {
    double k = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
      k += inv_metric[i] * p[i] * p[i];
    return 0.5 * k;
  }

  /// Returns the proposal's Hamiltonian error H(start) - H(end), negative
  /// infinity when the trajectory leaves the finite region.
  double trajectory(Point& pt, std::vector<double>& p, double step, int steps,
                    const std::vector<double>& inv_metric) const
  {
    const double h0 = -pt.lp + kinetic(p, inv_metric);
    for (int s = 0; s < steps; ++s) {
      for (std::size_t i = 0; i < p.size(); ++i)
        p[i] += 0.5 * step * pt.grad[i];
      for (std::size_t i = 0; i < p.size(); ++i)
        pt.q[i] += step * inv_metric[i] * p[i];
      if (!std::isfinite(evaluate(pt)))
        return -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < p.size(); ++i)
        p[i] += 0.5 * step * pt.grad[i];
    }
    const double h1 = -pt.lp + kinetic(p, inv_metric);
    return std::isfinite(h1) ? h0 - h1 : -std::numeric_limits<double>::infinity();
  }

 private:
  const LogDensityFn& f_;
  std::vector<double> p_;
};

void draw_momentum(std::vector<double>& p, const std::vector<double>& inv_metric, Rng& rng)
{
  for (std::size_t i = 0; i < p.size(); ++i)
    p[i] = std_normal(rng) / std::sqrt(inv_metric[i]);
}

/// Doubles or halves the step until a one-step acceptance crosses 0.8.
double initial_step_size(const Integrator& integ, const Point& start,
                         const std::vector<double>& inv_metric, Rng& rng)
{
  double step = 1.0;
  std::vector<double> p(start.q.size());
  int direction = 0;
  for (int iter = 0; iter < 100; ++iter) {
    Point pt = start;
    draw_momentum(p, inv_metric, rng);
    const double delta = integ.trajectory(pt, p, step, 1, inv_metric);
    const double accept = std::isfinite(delta) ? delta : -std::numeric_limits<double>::infinity();
    const int want = accept > std::log(0.8) ? 1 : -1;
    if (direction == 0)
      direction = want;
    if (want != direction)
      break;
    step = direction > 0 ? step * 2.0 : step * 0.5;
    if (step > 1e7 || step < 1e-10)
      break;
  }
  return step;
}

struct Welford {
  std::size_t n = 0;
  std::vector<double> mean, m2;

  explicit Welford(std::size_t dim) : mean(dim, 0.0), m2(dim, 0.0) {}
  void add(const std::vector<double>& x)
  {
    ++n;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - mean[i];
      mean[i] += d / static_cast<double>(n);
      m2[i] += d * (x[i] - mean[i]);
    }
  }
  void reset()
  {
    n = 0;
    std::fill(mean.begin(), mean.end(), 0.0);
    std::fill(m2.begin(), m2.end(), 0.0);
  }
  /// Variance shrunk toward 1e-3, as in Stan's regularized metric.
  std::vector<double> regularized() const
  {
    std::vector<double> v(mean.size());
    const double nn = static_cast<double>(n);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double var = m2[i] / (nn - 1.0);
      v[i] = (nn / (nn + 5.0)) * var + 1e-3 * (5.0 / (nn + 5.0));
    }
    return v;
  }
};

/// End iterations (exclusive) of the metric adaptation windows.
std::vector<int> window_ends(int warmup)
{
  std::vector<int> ends;
  constexpr int init_buffer = 75, term_buffer = 50, base_window = 25;
  if (warmup < 150)
    return ends;
  const int last = warmup - term_buffer;
  int start = init_buffer;
  int size = base_window;
  while (start < last) {
    int end = start + size;
    // Stretch the final window instead of leaving a short remainder.
    if (end + 2 * size > last)
      end = last;
    ends.push_back(end);
    start = end;
    size *= 2;
  }
  return ends;
}

}  // namespace

ChainResult run_hmc_chain(const LogDensityFn& log_density, std::vector<double> initial,
                          const HmcSettings& settings, Rng& rng)
{
  if (settings.warmup < 0 || settings.samples < 1)
    throw std::invalid_argument("HMC needs warmup >= 0 and samples >= 1");
  const std::size_t dim = initial.size();
  Integrator integ(log_density, dim);

  Point current{std::move(initial), {}, 0.0};
  if (!std::isfinite(integ.evaluate(current)))
    throw std::runtime_error("HMC initial point has non-finite log density");

  std::vector<double> inv_metric(dim, 1.0);
  double step = initial_step_size(integ, current, inv_metric, rng);
  DualAveraging adapt(step, settings.target_accept);
  auto ends = window_ends(settings.warmup);
  std::size_t next_window = 0;
  const int first_window_start = ends.empty() ? settings.warmup : 75;
  Welford welford(dim);

  ChainResult result;
  result.draws.reserve(static_cast<std::size_t>(settings.samples));
  std::vector<double> p(dim);
  double accept_total = 0.0;

  const int total = settings.warmup + settings.samples;
  for (int iter = 0; iter < total; ++iter) {
    const bool warming = iter < settings.warmup;
    if (iter == settings.warmup)
      step = (settings.warmup > 0 ? adapt.final_step() : step) * settings.step_size_scale;

    const double jitter = 0.5 + uniform01(rng);
    const int steps = std::clamp(
        static_cast<int>(std::ceil(settings.trajectory_length * jitter / step)), 1,
        settings.max_steps);

    draw_momentum(p, inv_metric, rng);
    Point proposal = current;
    const double delta = integ.trajectory(proposal, p, step, steps, inv_metric);
    const bool divergent = !std::isfinite(delta) || -delta > settings.divergence_threshold;
    const double accept_stat = std::isfinite(delta) ? std::min(1.0, std::exp(delta)) : 0.0;
    if (!divergent && uniform01(rng) < accept_stat)
      current = std::move(proposal);

    if (warming) {
      if (divergent)
        ++result.warmup_divergences;
      step = adapt.update(accept_stat);
      if (settings.adapt_metric && next_window < ends.size() && iter >= first_window_start) {
        welford.add(current.q);
        if (iter + 1 == ends[next_window]) {
          inv_metric = welford.regularized();
          welford.reset();
          ++next_window;
          step = initial_step_size(integ, current, inv_metric, rng);
          adapt.restart(step);
        }
      }
    } else {
      if (divergent)
        ++result.divergences;
      accept_total += accept_stat;
      result.draws.push_back(current.q);
      result.log_density.push_back(current.lp);
    }
  }
  result.step_size = step;
  result.mean_accept = accept_total / static_cast<double>(settings.samples);
  result.inverse_metric = std::move(inv_metric);
  return result;
}

}  // namespace ppsb
