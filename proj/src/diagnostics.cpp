#include "ppsb/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ppsb {

namespace {

double mean_of(const std::vector<double>& v, std::size_t lo, std::size_t hi)
{
  double s = 0.0;
  for (std::size_t i = lo; i < hi; ++i)
    s += v[i];
  return s / static_cast<double>(hi - lo);
}

double var_of(const std::vector<double>& v, std::size_t lo, std::size_t hi, double m)
{
  double s = 0.0;
  for (std::size_t i = lo; i < hi; ++i)
    s += (v[i] - m) * (v[i] - m);
  return s / static_cast<double>(hi - lo - 1);
}

void check_shape(const ChainValues& values, std::size_t min_len)
{
  if (values.size() < 2)
    throw std::invalid_argument("diagnostics need at least two chains");
  for (const auto& c : values)
    if (c.size() != values[0].size() || c.size() < min_len)
      throw std::invalid_argument("chains must have equal length >= " + std::to_string(min_len));
}

}  // namespace

double split_rhat(const ChainValues& values)
{
  check_shape(values, 4);
  const std::size_t half = values[0].size() / 2;
  const std::size_t offset = values[0].size() - 2 * half;  // drop a leading odd draw
  std::vector<double> means, vars;
  for (const auto& c : values) {
    for (std::size_t part = 0; part < 2; ++part) {
      const std::size_t lo = offset + part * half;
      const double m = mean_of(c, lo, lo + half);
      means.push_back(m);
      vars.push_back(var_of(c, lo, lo + half, m));
    }
  }
  const double n = static_cast<double>(half);
  const double chains = static_cast<double>(means.size());
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / chains;
  double b = 0.0;
  for (double m : means)
    b += (m - grand) * (m - grand);
  b *= n / (chains - 1.0);
  const double w = std::accumulate(vars.begin(), vars.end(), 0.0) / chains;
  const double scale = std::max(1.0, std::abs(grand));
  if (!(w > 1e-300 * scale)) {
    if (b > 1e-24 * scale * scale)
      return std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

double effective_sample_size(const ChainValues& values)
{
  check_shape(values, 4);
  const std::size_t m = values.size();
  const std::size_t n = values[0].size();
  std::vector<double> means(m), vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = mean_of(values[c], 0, n);
    vars[c] = var_of(values[c], 0, n, means[c]);
  }
  const double w = std::accumulate(vars.begin(), vars.end(), 0.0) / static_cast<double>(m);
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(m);
  double b = 0.0;
  for (double mu : means)
    b += (mu - grand) * (mu - grand);
  b *= static_cast<double>(n) / static_cast<double>(m - 1);
  const double nn = static_cast<double>(n);
  const double var_plus = (nn - 1.0) / nn * w + b / nn;
  if (!(w > 0.0) || !(var_plus > 0.0))
    return std::numeric_limits<double>::quiet_NaN();

  auto rho = [&](std::size_t lag) {
    double acov = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i + lag < n; ++i)
        s += (values[c][i] - means[c]) * (values[c][i + lag] - means[c]);
      acov += s / nn;
    }
    acov /= static_cast<double>(m);
    return 1.0 - (w * (nn - 1.0) / nn - acov) / var_plus;
  };

  // Geyer: sum pairs Gamma_k = rho_{2k} + rho_{2k+1} while positive,
  // forcing the sequence to be nonincreasing.
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = rho(2 * k) + rho(2 * k + 1);
    if (!(pair > 0.0))
      break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / std::log10(static_cast<double>(m * n)));
  return static_cast<double>(m * n) / tau;
}

double Diagnostics::max_rhat() const
{
  double best = std::numeric_limits<double>::quiet_NaN();
  for (double r : rhat)
    if (!std::isnan(r) && (std::isnan(best) || r > best))
      best = r;
  return best;
}

std::size_t Diagnostics::undefined_rhat() const
{
  return static_cast<std::size_t>(std::count_if(rhat.begin(), rhat.end(),
                                                [](double r) { return std::isnan(r); }));
}

}  // namespace ppsb
