#include "ppsb/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ppsb/size_models.hpp"

namespace ppsb {

namespace {

struct MethodName {
  Method method;
  const char* name;
};

constexpr MethodName kMethodNames[] = {
    {Method::NegBin, "negbin"},       {Method::Lognormal, "lognormal"},
    {Method::BayesianBootstrap, "bb"}, {Method::Hajek, "hajek"},
    {Method::Greg, "greg"},           {Method::ClusterInds, "cluster_inds"},
    {Method::KnowSizes, "knowsizes"},
};

}  // namespace

std::string to_string(Method method)
{
  for (const auto& m : kMethodNames)
    if (m.method == method)
      return m.name;
  throw std::logic_error("unknown method");
}

Method method_from_string(const std::string& name)
{
  for (const auto& m : kMethodNames)
    if (name == m.name)
      return m.method;
  throw std::invalid_argument("unknown method '" + name + "'");
}

std::vector<Method> parse_methods(const std::string& list)
{
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty())
      continue;
    const Method m = method_from_string(item);
    if (std::find(out.begin(), out.end(), m) == out.end())
      out.push_back(m);
  }
  if (out.empty())
    throw std::invalid_argument("empty method list");
  return out;
}

std::vector<Method> all_methods()
{
  std::vector<Method> out;
  for (const auto& m : kMethodNames)
    out.push_back(m.method);
  return out;
}

bool is_bayesian(Method method)
{
  return method != Method::Hajek && method != Method::Greg;
}

bool supports(Method method, OutcomeKind outcome)
{
  return !(method == Method::Greg && outcome == OutcomeKind::Binary);
}

double percentile(std::vector<double> values, double q)
{
  if (values.empty())
    throw std::invalid_argument("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

OutcomeModelSpec bayesian_spec(Method method, OutcomeKind outcome)
{
  switch (method) {
    case Method::NegBin: return make_spec(outcome, true, SizeModelKind::NegBin);
    case Method::Lognormal: return make_spec(outcome, true, SizeModelKind::Lognormal);
    case Method::BayesianBootstrap:
      return make_spec(outcome, true, SizeModelKind::BayesianBootstrap);
    case Method::KnowSizes: return make_spec(outcome, true, SizeModelKind::Known);
    case Method::ClusterInds: return make_spec(outcome, false, SizeModelKind::Known);
    default: throw std::logic_error("not a Bayesian method");
  }
}

MethodOutcome classical(Method method, const TwoStageSample& sample,
                        const MethodSettings& settings, std::uint64_t seed)
{
  EstimatorOptions opts = settings.estimator;
  opts.subsample_seed = seed;
  const DesignEstimate est = method == Method::Hajek ? hajek(sample, opts) : greg(sample, opts);
  MethodOutcome out;
  if (!est.ci50 || !est.ci95) {
    out.failure = "design variance undefined";
    return out;
  }
  out.estimate = MethodEstimate{est.point, *est.ci50, *est.ci95};
  return out;
}

}  // namespace

MethodOutcome estimate_method(Method method, const FinitePopulation& pop,
                              const TwoStageSample& sample, const MethodSettings& settings,
                              std::uint64_t seed, std::ostream* draws_out)
{
  if (!supports(method, sample.outcome))
    throw std::invalid_argument(to_string(method) + " is for continuous outcomes only");
  if (!is_bayesian(method))
    return classical(method, sample, settings, seed);

  const auto spec = bayesian_spec(method, sample.outcome);
  auto fit = run_chains(spec, sample, settings.priors, settings.schedule, derive_seed(seed, 0));
  MethodOutcome out;
  out.diagnostics = fit.diagnostics;
  out.iterations_per_chain = fit.iterations_per_chain;
  if (draws_out)
    write_draws(fit.draws, *draws_out);
  if (!fit.converged) {
    out.failure = fit.failure;
    return out;
  }

  PosteriorModel model(fit.spec, sample, settings.priors);
  std::vector<std::int64_t> known;
  if (spec.size_model == SizeModelKind::Known)
    known = known_sizes(pop, sample);
  auto sizes = make_size_sampler(model, sample, std::move(known));
  Rng rng = make_rng(seed, 1);
  auto pred = predict_ybar(model, fit.draws, sample, sizes, rng, settings.prediction);
  out.size_discrepancy = pred.mean_size_discrepancy;

  MethodEstimate est;
  est.point = std::accumulate(pred.ybar.begin(), pred.ybar.end(), 0.0) /
              static_cast<double>(pred.ybar.size());
  est.ci50 = {percentile(pred.ybar, 0.25), percentile(pred.ybar, 0.75)};
  est.ci95 = {percentile(pred.ybar, 0.025), percentile(pred.ybar, 0.975)};
  out.estimate = est;
  return out;
}

bool covers(const Interval& interval, double point, double truth)
{
  if (interval.width() == 0.0)
    return std::abs(point - truth) <= 1e-12 * std::abs(truth);
  return interval.contains(truth);
}

MetricsRow compute_metrics(std::span<const MethodEstimate> estimates, double truth)
{
  if (estimates.empty())
    throw std::invalid_argument("metrics need at least one estimate");
  if (truth == 0.0)
    throw std::invalid_argument("relative metrics are undefined for a zero truth");
  MetricsRow row;
  row.L = estimates.size();
  const double L = static_cast<double>(row.L);
  for (const auto& e : estimates) {
    const double rel = (truth - e.point) / truth;
    row.rel_bias += rel;
    row.rrmse += rel * rel;
    row.cover50 += covers(e.ci50, e.point, truth) ? 1.0 : 0.0;
    row.cover95 += covers(e.ci95, e.point, truth) ? 1.0 : 0.0;
    row.relwidth50 += e.ci50.width() / std::abs(truth);
    row.relwidth95 += e.ci95.width() / std::abs(truth);
  }
  row.rel_bias /= L;
  row.rrmse = std::sqrt(row.rrmse / L);
  row.cover50 /= L;
  row.cover95 /= L;
  row.relwidth50 /= L;
  row.relwidth95 /= L;
  return row;
}

const MethodReport* MetricsReport::find(Method method) const
{
  for (const auto& m : methods)
    if (m.method == method)
      return &m;
  return nullptr;
}

FinitePopulation scenario_population(const Scenario& scenario)
{
  Rng rng = make_rng(scenario.population_seed, 0);
  ClusterSizeFrame frame = scenario.fixed_frame
                               ? *scenario.fixed_frame
                               : generate_frame(scenario.source, scenario.clusters,
                                                scenario.js_max, rng);
  validate_design(scenario.design, frame);
  return generate_population(frame, scenario.hyper, scenario.outcome, rng);
}

MetricsReport run_scenario(const Scenario& scenario, std::span<const Method> methods,
                           const MethodSettings& settings, const RunOptions& options)
{
  return run_scenario(scenario, scenario_population(scenario), methods, settings, options);
}

MetricsReport run_scenario(const Scenario& scenario, const FinitePopulation& pop,
                           std::span<const Method> methods, const MethodSettings& settings,
                           const RunOptions& options)
{
  if (scenario.replicates < 1)
    throw std::invalid_argument("a scenario needs at least one replicate");
  validate_design(scenario.design, pop.frame);

  std::vector<Method> active;
  for (Method m : methods)
    if (supports(m, pop.outcome))
      active.push_back(m);

  const auto R = static_cast<std::size_t>(scenario.replicates);
  // results[r][m]; a replicate that never ran stays empty.
  std::vector<std::optional<std::vector<MethodOutcome>>> results(R);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;

  auto cancelled = [&] { return options.cancel && options.cancel->load(); };
  auto worker = [&] {
    for (;;) {
      if (cancelled())
        return;
      const std::size_t r = next.fetch_add(1);
      if (r >= R)
        return;
      const std::uint64_t rep_seed = derive_seed(scenario.seed, r);
      Rng rng = make_rng(rep_seed, 0);
      const TwoStageSample sample = draw_sample(pop, scenario.design, rng);
      std::vector<MethodOutcome> row;
      row.reserve(active.size());
      for (Method m : active) {
        const auto method_seed = derive_seed(rep_seed, 1 + static_cast<std::uint64_t>(m));
        try {
          row.push_back(estimate_method(m, pop, sample, settings, method_seed));
        } catch (const std::exception& e) {
          MethodOutcome failed;
          failed.failure = e.what();
          row.push_back(std::move(failed));
        }
        if (cancelled())
          return;
      }
      results[r] = std::move(row);
      const std::size_t finished = done.fetch_add(1) + 1;
      if (options.progress) {
        std::lock_guard lock(progress_mutex);
        options.progress(finished, R);
      }
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, R));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back(worker);
    for (auto& t : pool)
      t.join();
  }

  MetricsReport report;
  report.scenario_id = scenario.id;
  report.frame = scenario.frame_name.empty() ? source_name(pop.frame.source) : scenario.frame_name;
  report.outcome = pop.outcome;
  report.js = scenario.design.js;
  report.design = scenario.design.label();
  report.truth = pop.truth.ybar;
  for (const auto& r : results)
    if (!r)
      report.truncated = true;

  for (std::size_t m = 0; m < active.size(); ++m) {
    MethodReport mr;
    mr.method = active[m];
    std::vector<MethodEstimate> kept;
    for (const auto& r : results) {
      if (!r)
        continue;
      ++mr.attempted;
      const auto& outcome = (*r)[m];
      mr.replicates.push_back(outcome.estimate);
      if (outcome.estimate) {
        kept.push_back(*outcome.estimate);
      } else {
        ++mr.discarded;
        mr.last_failure = outcome.failure;
      }
    }
    if (!kept.empty() && report.truth != 0.0)
      mr.metrics = compute_metrics(kept, report.truth);
    report.methods.push_back(std::move(mr));
  }
  return report;
}

CityFrame read_city_frame(const std::string& path, double divisor, std::size_t js)
{
  std::ifstream in(path);
  if (!in)
    throw PopulationError("cannot open city file '" + path + "'");
  std::vector<double> raw;
  std::vector<bool> large;
  std::vector<std::string> names;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#')
      continue;
    std::istringstream ls(line);
    double size = 0.0;
    std::string flag;
    if (!(ls >> size >> flag) || !(size > 0.0) || (flag != "L" && flag != "S"))
      throw PopulationError("malformed city row at line " + std::to_string(lineno) +
                            " (expected: size L|S name)");
    std::string name;
    std::getline(ls, name);
    name.erase(0, name.find_first_not_of(" \t"));
    while (!name.empty() && (name.back() == '\r' || name.back() == ' '))
      name.pop_back();
    raw.push_back(size / divisor);
    large.push_back(flag == "L");
    names.push_back(name.empty() ? "city" + std::to_string(raw.size()) : name);
  }
  if (raw.size() < kCityRows)
    throw PopulationError("city file has " + std::to_string(raw.size()) + " rows, expected " +
                          std::to_string(kCityRows));

  CityFrame out;
  auto sizes = round_sizes(raw);
  for (;;) {
    const std::int64_t N = std::accumulate(sizes.begin(), sizes.end(), std::int64_t{0});
    const auto biggest = std::max_element(sizes.begin(), sizes.end());
    if (static_cast<double>(js) * static_cast<double>(*biggest) < static_cast<double>(N))
      break;
    const auto idx = static_cast<std::size_t>(biggest - sizes.begin());
    out.removed.push_back(names[idx]);
    sizes.erase(biggest);
    large.erase(large.begin() + static_cast<std::ptrdiff_t>(idx));
    names.erase(names.begin() + static_cast<std::ptrdiff_t>(idx));
    if (sizes.size() <= js)
      throw PopulationError("certainty removal left too few cities");
  }
  out.frame.sizes = std::move(sizes);
  out.frame.source = FileSource{path, divisor};
  out.designated_large = std::move(large);
  out.names = std::move(names);
  return out;
}

Scenario fragile_families_scenario(const std::string& path, OutcomeKind outcome, int replicates,
                                   std::uint64_t seed)
{
  CityFrame city = read_city_frame(path);
  Scenario s;
  s.id = "ff-" + to_string(outcome);
  s.source = city.frame.source;
  s.clusters = static_cast<int>(city.frame.cluster_count());
  s.outcome = outcome;
  DesignatedCounts within;
  within.designated_large = city.designated_large;
  s.design = DesignSpec{kCitySampleSize, within};
  s.js_max = static_cast<int>(kCitySampleSize);
  s.fixed_frame = std::move(city.frame);
  s.frame_name = "ff";
  s.replicates = replicates;
  s.population_seed = derive_seed(seed, 0);
  s.seed = derive_seed(seed, 1);
  return s;
}

double sample_skewness(std::span<const double> values)
{
  const double n = static_cast<double>(values.size());
  if (values.size() < 3)
    return std::numeric_limits<double>::quiet_NaN();
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  if (m2 == 0.0)
    return 0.0;
  return m3 / std::pow(m2, 1.5);
}

namespace {

void describe(const std::string& frame, const std::string& scale, std::vector<double> v,
              std::vector<DensityRow>& out)
{
  constexpr int kBins = 20;
  static constexpr double kQuantiles[] = {0.0, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 1.0};
  for (double q : kQuantiles) {
    std::ostringstream label;
    label << "q" << q;
    out.push_back({frame, scale, "quantile", label.str(), percentile(v, q)});
  }
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  const double lo = *mn, hi = *mx;
  const double width = hi > lo ? (hi - lo) / kBins : 1.0;
  std::vector<double> counts(kBins, 0.0);
  for (double x : v) {
    int b = static_cast<int>((x - lo) / width);
    counts[static_cast<std::size_t>(std::clamp(b, 0, kBins - 1))] += 1.0;
  }
  for (int b = 0; b < kBins; ++b) {
    std::ostringstream label;
    label << std::setprecision(10) << lo + b * width << ":" << lo + (b + 1) * width;
    out.push_back({frame, scale, "bin", label.str(), counts[static_cast<std::size_t>(b)]});
  }
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v)
    ss += (x - mean) * (x - mean);
  out.push_back({frame, scale, "moment", "n", n});
  out.push_back({frame, scale, "moment", "mean", mean});
  out.push_back({frame, scale, "moment", "sd", v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0});
  out.push_back({frame, scale, "moment", "skewness", sample_skewness(v)});
}

}  // namespace

std::vector<DensityRow> size_density_report(
    std::span<const std::pair<std::string, ClusterSizeFrame>> frames)
{
  std::vector<DensityRow> out;
  for (const auto& [name, frame] : frames) {
    if (frame.sizes.empty())
      continue;
    auto raw = as_doubles(frame.sizes);
    std::vector<double> logs(raw.size());
    std::transform(raw.begin(), raw.end(), logs.begin(), [](double x) { return std::log10(x); });
    describe(name, "raw", raw, out);
    describe(name, "log10", logs, out);
  }
  return out;
}

void write_density_csv(std::span<const DensityRow> rows, std::ostream& out)
{
  out << "frame,scale,kind,label,value\n" << std::setprecision(10);
  for (const auto& r : rows)
    out << r.frame << ',' << r.scale << ',' << r.kind << ',' << r.label << ',' << r.value << '\n';
}

namespace {

void write_prefix(const MetricsReport& report, std::ostream& out)
{
  out << report.scenario_id << ',' << report.frame << ',' << to_string(report.outcome) << ','
      << report.js << ',' << report.design << ',';
}

}  // namespace

void write_report_header(std::ostream& out)
{
  out << "scenario_id,frame,outcome,Js,design,method,L,discarded,rel_bias,rrmse,cover50,"
         "cover95,relwidth50,relwidth95\n";
}

void write_report_rows(const MetricsReport& report, std::ostream& out)
{
  out << std::setprecision(8);
  for (const auto& m : report.methods) {
    write_prefix(report, out);
    out << to_string(m.method) << ',' << (m.attempted - m.discarded) << ',' << m.discarded;
    if (m.metrics) {
      const auto& r = *m.metrics;
      out << ',' << r.rel_bias << ',' << r.rrmse << ',' << r.cover50 << ',' << r.cover95 << ','
          << r.relwidth50 << ',' << r.relwidth95 << '\n';
    } else {
      out << ",NA,NA,NA,NA,NA,NA\n";
    }
  }
}

void write_figure_header(std::ostream& out)
{
  out << "scenario_id,frame,outcome,Js,design,method,metric,value\n";
}

void write_figure_rows(const MetricsReport& report, std::ostream& out)
{
  out << std::setprecision(8);
  for (const auto& m : report.methods) {
    if (!m.metrics)
      continue;
    const auto& r = *m.metrics;
    const std::pair<const char*, double> values[] = {
        {"rel_bias", r.rel_bias},     {"rrmse", r.rrmse},
        {"cover50", r.cover50},       {"cover95", r.cover95},
        {"relwidth50", r.relwidth50}, {"relwidth95", r.relwidth95},
    };
    for (const auto& [name, value] : values) {
      write_prefix(report, out);
      out << to_string(m.method) << ',' << name << ',' << value << '\n';
    }
  }
}

}  // namespace ppsb
