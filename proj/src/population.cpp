#include "ppsb/population.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace ppsb {

std::string to_string(OutcomeKind kind)
{
  return kind == OutcomeKind::Continuous ? "continuous" : "binary";
}

OutcomeKind outcome_from_string(const std::string& name)
{
  if (name == "continuous")
    return OutcomeKind::Continuous;
  if (name == "binary")
    return OutcomeKind::Binary;
  throw std::invalid_argument("unknown outcome kind '" + name + "'");
}

std::string source_name(const SizeSource& source)
{
  struct Visitor {
    std::string operator()(const PoissonSource&) const { return "poisson"; }
    std::string operator()(const GammaMultinomialSource&) const { return "gamma_multinomial"; }
    std::string operator()(const FileSource&) const { return "file"; }
  };
  return std::visit(Visitor{}, source);
}

std::int64_t ClusterSizeFrame::total() const
{
  return std::accumulate(sizes.begin(), sizes.end(), std::int64_t{0});
}

bool has_certainty_cluster(std::span<const std::int64_t> sizes, int js)
{
  const auto total = std::accumulate(sizes.begin(), sizes.end(), std::int64_t{0});
  for (auto n : sizes)
    if (static_cast<double>(js) * static_cast<double>(n) >= static_cast<double>(total))
      return true;
  return false;
}

std::vector<std::int64_t> round_sizes(std::span<const double> raw)
{
  std::vector<std::int64_t> out;
  out.reserve(raw.size());
  for (double v : raw) {
    if (!std::isfinite(v))
      throw PopulationError("non-finite cluster size");
    out.push_back(std::max<std::int64_t>(1, std::llround(v)));
  }
  return out;
}

std::vector<double> read_size_column(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw PopulationError("cannot open size file '" + path + "'");
  std::vector<double> sizes;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#')
      continue;
    std::istringstream fields(line.substr(first));
    double value = 0.0;
    if (!(fields >> value) || !(value > 0.0))
      throw PopulationError(path + ":" + std::to_string(lineno) + ": expected a positive size");
    sizes.push_back(value);
  }
  return sizes;
}

namespace {

std::vector<std::int64_t> draw_sizes(const PoissonSource& src, int clusters, Rng& rng)
{
  std::vector<std::int64_t> sizes(static_cast<std::size_t>(clusters));
  for (auto& n : sizes)
    n = std::max<std::int64_t>(1, poisson_draw(src.rate, rng));
  return sizes;
}

std::vector<std::int64_t> draw_sizes(const GammaMultinomialSource& src, int clusters, Rng& rng)
{
  const auto count = static_cast<std::size_t>(clusters);
  std::vector<double> candidates(count);
  for (auto& c : candidates)
    c = src.scale * gamma_draw(src.shape, 1.0 / src.rate, rng);
  std::vector<double> conc(count, src.concentration);
  auto probs = dirichlet_draw(conc, rng);
  auto counts = multinomial_draw(clusters, probs, rng);

  std::vector<double> raw;
  raw.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    raw.insert(raw.end(), static_cast<std::size_t>(counts[i]), candidates[i]);
  auto perm = random_permutation(raw.size(), rng);
  std::vector<double> shuffled(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    shuffled[i] = raw[perm[i]];
  return round_sizes(shuffled);
}

void validate(const PoissonSource& src)
{
  if (!(src.rate > 0.0))
    throw PopulationError("Poisson rate must be positive");
}

void validate(const GammaMultinomialSource& src)
{
  if (!(src.shape > 0.0) || !(src.rate > 0.0) || !(src.scale > 0.0) ||
      !(src.concentration > 0.0))
    throw PopulationError("gamma/multinomial parameters must be positive");
}

}  // namespace

ClusterSizeFrame generate_frame(const SizeSource& source, int clusters, int js_max, Rng& rng,
                                int max_attempts)
{
  if (const auto* file = std::get_if<FileSource>(&source)) {
    if (!(file->divisor > 0.0))
      throw PopulationError("size divisor must be positive");
    auto raw = read_size_column(file->path);
    for (auto& v : raw)
      v /= file->divisor;
    ClusterSizeFrame frame{round_sizes(raw), source};
    if (frame.cluster_count() < 2)
      throw PopulationError("frame needs at least two clusters");
    if (clusters > 0 && static_cast<std::size_t>(clusters) != frame.cluster_count())
      throw PopulationError("size file has " + std::to_string(frame.cluster_count()) +
                            " clusters, expected " + std::to_string(clusters));
    if (has_certainty_cluster(frame.sizes, js_max))
      throw PopulationError("size file contains a certainty cluster for Js=" +
                            std::to_string(js_max));
    return frame;
  }

  if (clusters < 2)
    throw PopulationError("frame needs at least two clusters (J >= 2)");
  std::visit([](const auto& s) {
    if constexpr (!std::is_same_v<std::decay_t<decltype(s)>, FileSource>)
      validate(s);
  }, source);

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<std::int64_t> sizes;
    if (const auto* p = std::get_if<PoissonSource>(&source))
      sizes = draw_sizes(*p, clusters, rng);
    else
      sizes = draw_sizes(std::get<GammaMultinomialSource>(source), clusters, rng);
    if (!has_certainty_cluster(sizes, js_max))
      return ClusterSizeFrame{std::move(sizes), source};
  }
  throw PopulationError("no frame without certainty clusters after " +
                        std::to_string(max_attempts) + " attempts");
}

DgpCoefficients draw_coefficients(const DgpHyper& hyper, Rng& rng)
{
  DgpCoefficients c;
  c.alpha0 = hyper.coef_sd * std_normal(rng);
  c.alpha1 = hyper.coef_sd * std_normal(rng);
  c.gamma0 = hyper.coef_sd * std_normal(rng);
  c.gamma1 = hyper.coef_sd * std_normal(rng);
  c.sigma_beta0 = half_normal(hyper.sigma_beta_scale, rng);
  c.sigma_beta1 = half_normal(hyper.sigma_beta_scale, rng);
  c.sigma_y = half_normal(hyper.sigma_y_scale, rng);
  return c;
}

DgpParams draw_cluster_effects(const ClusterSizeFrame& frame, OutcomeKind outcome,
                               const DgpCoefficients& coef, Rng& rng)
{
  auto logc = centered_log_sizes(as_doubles(frame.sizes));
  DgpParams params{coef, {}, {}};
  params.beta0.resize(logc.size());
  for (std::size_t j = 0; j < logc.size(); ++j)
    params.beta0[j] = coef.alpha0 + coef.gamma0 * logc[j] + coef.sigma_beta0 * std_normal(rng);
  if (outcome == OutcomeKind::Continuous) {
    params.beta1.resize(logc.size());
    for (std::size_t j = 0; j < logc.size(); ++j)
      params.beta1[j] =
          coef.alpha1 + coef.gamma1 * logc[j] + coef.sigma_beta1 * std_normal(rng);
  }
  return params;
}

double FinitePopulation::cluster_xbar(std::size_t j) const
{
  const auto& x = clusters.at(j).x;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double FinitePopulation::population_xbar() const
{
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : clusters) {
    sum += std::accumulate(c.x.begin(), c.x.end(), 0.0);
    n += c.x.size();
  }
  return sum / static_cast<double>(n);
}

TruthRecord compute_truth(const std::vector<ClusterUnits>& clusters)
{
  TruthRecord truth;
  double total = 0.0;
  std::size_t n = 0;
  truth.cluster_means.reserve(clusters.size());
  for (const auto& c : clusters) {
    double s = std::accumulate(c.y.begin(), c.y.end(), 0.0);
    truth.cluster_means.push_back(s / static_cast<double>(c.y.size()));
    total += s;
    n += c.y.size();
  }
  truth.ybar = total / static_cast<double>(n);
  return truth;
}

FinitePopulation generate_population(const ClusterSizeFrame& frame, const DgpParams& params,
                                     OutcomeKind outcome, Rng& rng)
{
  const auto J = frame.cluster_count();
  if (J == 0 || params.beta0.size() != J ||
      (outcome == OutcomeKind::Continuous && params.beta1.size() != J))
    throw PopulationError("cluster effects do not match the frame");
  for (auto n : frame.sizes)
    if (n < 1)
      throw PopulationError("cluster sizes must be positive");

  FinitePopulation pop;
  pop.frame = frame;
  pop.outcome = outcome;
  pop.params = params;
  pop.clusters.resize(J);

  double xsum = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    auto& x = pop.clusters[j].x;
    x.resize(static_cast<std::size_t>(frame.sizes[j]));
    for (auto& v : x) {
      v = static_cast<double>(uniform_int(20, 45, rng));
      xsum += v;
    }
  }
  const double xmean = xsum / static_cast<double>(frame.total());

  const auto& c = params.coef;
  for (std::size_t j = 0; j < J; ++j) {
    auto& unit = pop.clusters[j];
    unit.y.resize(unit.x.size());
    for (std::size_t i = 0; i < unit.x.size(); ++i) {
      unit.x[i] -= xmean;
      if (outcome == OutcomeKind::Continuous) {
        unit.y[i] = params.beta0[j] + params.beta1[j] * unit.x[i] + c.sigma_y * std_normal(rng);
      } else {
        double p = 1.0 / (1.0 + std::exp(-params.beta0[j]));
        unit.y[i] = uniform01(rng) < p ? 1.0 : 0.0;
      }
    }
  }
  pop.truth = compute_truth(pop.clusters);
  return pop;
}

FinitePopulation generate_population(const ClusterSizeFrame& frame, const DgpHyper& hyper,
                                     OutcomeKind outcome, Rng& rng)
{
  auto coef = draw_coefficients(hyper, rng);
  auto params = draw_cluster_effects(frame, outcome, coef, rng);
  return generate_population(frame, params, outcome, rng);
}

double mean_log_size(std::span<const double> reference)
{
  if (reference.empty())
    throw PopulationError("log-size centering needs a nonempty reference set");
  double s = 0.0;
  for (double n : reference) {
    if (!(n >= 1.0))
      throw PopulationError("cluster sizes must be >= 1");
    s += std::log(n);
  }
  return s / static_cast<double>(reference.size());
}

std::vector<double> centered_log_sizes(std::span<const double> sizes,
                                       std::span<const double> reference)
{
  const double center = mean_log_size(reference);
  std::vector<double> out(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (!(sizes[i] >= 1.0))
      throw PopulationError("cluster sizes must be >= 1");
    out[i] = std::log(sizes[i]) - center;
  }
  return out;
}

std::vector<double> centered_log_sizes(std::span<const double> sizes)
{
  return centered_log_sizes(sizes, sizes);
}

std::vector<double> as_doubles(std::span<const std::int64_t> values)
{
  return {values.begin(), values.end()};
}

void write_frame(const ClusterSizeFrame& frame, std::ostream& out)
{
  out << "# source=" << source_name(frame.source) << " J=" << frame.cluster_count()
      << " N=" << frame.total() << '\n';
  for (auto n : frame.sizes)
    out << n << '\n';
}

void write_population(const FinitePopulation& pop, std::ostream& out)
{
  out << "# outcome=" << to_string(pop.outcome) << '\n';
  out << "cluster_id\tunit_id\tx\ty\n";
  out << std::setprecision(17);
  for (std::size_t j = 0; j < pop.clusters.size(); ++j) {
    const auto& c = pop.clusters[j];
    for (std::size_t i = 0; i < c.x.size(); ++i)
      out << j << '\t' << i << '\t' << c.x[i] << '\t' << c.y[i] << '\n';
  }
}

FinitePopulation read_population(std::istream& in)
{
  FinitePopulation pop;
  std::string line;
  bool have_outcome = false;
  bool have_header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty())
      continue;
    if (line[0] == '#') {
      auto pos = line.find("outcome=");
      if (pos != std::string::npos) {
        std::istringstream rest(line.substr(pos + 8));
        std::string name;
        rest >> name;
        pop.outcome = outcome_from_string(name);
        have_outcome = true;
      }
      continue;
    }
    if (!have_header) {
      if (line.rfind("cluster_id", 0) != 0)
        throw PopulationError("population file: missing column header");
      have_header = true;
      continue;
    }
    std::istringstream fields(line);
    std::size_t cluster = 0, unit = 0;
    double x = 0.0, y = 0.0;
    if (!(fields >> cluster >> unit >> x >> y))
      throw PopulationError("population file: malformed row at line " + std::to_string(lineno));
    if (cluster >= pop.clusters.size()) {
      if (cluster != pop.clusters.size())
        throw PopulationError("population file: cluster ids must be contiguous");
      pop.clusters.emplace_back();
    }
    auto& c = pop.clusters[cluster];
    if (unit != c.x.size())
      throw PopulationError("population file: unit ids must be contiguous");
    c.x.push_back(x);
    c.y.push_back(y);
  }
  if (!have_outcome || pop.clusters.size() < 2)
    throw PopulationError("population file: needs an outcome line and >= 2 clusters");
  for (const auto& c : pop.clusters)
    pop.frame.sizes.push_back(static_cast<std::int64_t>(c.x.size()));
  pop.frame.source = FileSource{"<population>", 1.0};
  pop.truth = compute_truth(pop.clusters);
  return pop;
}

}  // namespace ppsb
