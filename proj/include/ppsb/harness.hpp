#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ppsb/design.hpp"
#include "ppsb/estimators.hpp"
#include "ppsb/inference.hpp"
#include "ppsb/model.hpp"
#include "ppsb/population.hpp"

namespace ppsb {

enum class Method { NegBin, Lognormal, BayesianBootstrap, Hajek, Greg, ClusterInds, KnowSizes };

std::string to_string(Method method);
Method method_from_string(const std::string& name);
/// Comma-separated method names; duplicates removed, order kept.
std::vector<Method> parse_methods(const std::string& list);
std::vector<Method> all_methods();
bool is_bayesian(Method method);
bool supports(Method method, OutcomeKind outcome);

/// Settings shared by every method of a run.
struct MethodSettings {
  SamplerSchedule schedule;
  PriorBlock priors;
  PredictionOptions prediction;
  EstimatorOptions estimator;
};

struct MethodEstimate {
  double point = 0.0;
  Interval ci50;
  Interval ci95;
};

/// Outcome of one method on one sample; `estimate` is empty when the
/// replicate is discarded.
struct MethodOutcome {
  std::optional<MethodEstimate> estimate;
  std::string failure;
  std::optional<Diagnostics> diagnostics;
  int iterations_per_chain = 0;
  double size_discrepancy = 0.0;
};

/// Runs one method on one sample. Bayesian methods use `seed` for their
/// chains and predictive draws; `draws_out`, when given, receives the
/// retained posterior draws.
MethodOutcome estimate_method(Method method, const FinitePopulation& pop,
                              const TwoStageSample& sample, const MethodSettings& settings,
                              std::uint64_t seed, std::ostream* draws_out = nullptr);

/// Linear-interpolation percentile of unsorted values, q in [0, 1].
double percentile(std::vector<double> values, double q);

struct Scenario {
  std::string id;
  SizeSource source = PoissonSource{};
  int clusters = 100;
  /// Used instead of `source` when set (the Fragile Families frame).
  std::optional<ClusterSizeFrame> fixed_frame;
  /// Frame name written to reports; the source name when empty.
  std::string frame_name;
  OutcomeKind outcome = OutcomeKind::Continuous;
  DesignSpec design;
  /// Largest Js the frame must support without certainty selections.
  int js_max = 50;
  int replicates = 100;
  DgpHyper hyper;
  std::uint64_t population_seed = 0;
  std::uint64_t seed = 0;
};

struct MetricsRow {
  std::size_t L = 0;
  double rel_bias = 0.0;
  double rrmse = 0.0;
  double cover50 = 0.0;
  double cover95 = 0.0;
  double relwidth50 = 0.0;
  double relwidth95 = 0.0;
};

/// Interval coverage with the zero-width convention: a degenerate interval
/// covers iff |point - truth| <= 1e-12 |truth|.
bool covers(const Interval& interval, double point, double truth);

/// Relative bias (truth - estimate) / truth, RRMSE, coverage and relative
/// widths averaged over the estimates. Throws on an empty set or truth 0.
MetricsRow compute_metrics(std::span<const MethodEstimate> estimates, double truth);

struct MethodReport {
  Method method = Method::Hajek;
  std::size_t attempted = 0;
  std::size_t discarded = 0;
  std::optional<MetricsRow> metrics;  // empty when every replicate was discarded
  std::vector<std::optional<MethodEstimate>> replicates;
  std::string last_failure;
};

struct MetricsReport {
  std::string scenario_id;
  std::string frame;
  OutcomeKind outcome = OutcomeKind::Continuous;
  std::size_t js = 0;
  std::string design;
  double truth = 0.0;
  std::vector<MethodReport> methods;
  bool truncated = false;

  const MethodReport* find(Method method) const;
};

struct RunOptions {
  unsigned workers = 1;
  const std::atomic<bool>* cancel = nullptr;
  /// Called after every completed replicate with (done, total).
  std::function<void(std::size_t, std::size_t)> progress;
};

/// Builds the scenario's frame and its single population.
FinitePopulation scenario_population(const Scenario& scenario);

/// One population, `replicates` independent samples, every requested method
/// per sample. GREG is skipped for binary outcomes.
MetricsReport run_scenario(const Scenario& scenario, std::span<const Method> methods,
                           const MethodSettings& settings, const RunOptions& options = {});
MetricsReport run_scenario(const Scenario& scenario, const FinitePopulation& pop,
                           std::span<const Method> methods, const MethodSettings& settings,
                           const RunOptions& options = {});

/// Frame built from a city file: size, L/S designation, name per row.
struct CityFrame {
  ClusterSizeFrame frame;
  std::vector<bool> designated_large;
  std::vector<std::string> names;
  std::vector<std::string> removed;  // certainty cities, in removal order
};

inline constexpr std::size_t kCityRows = 77;
inline constexpr std::size_t kCitySampleSize = 16;
inline constexpr double kCityDivisor = 100.0;

/// Reads the city file, scales sizes, and removes certainty cities one at a
/// time (largest first) until none remains at Js = 16.
CityFrame read_city_frame(const std::string& path, double divisor = kCityDivisor,
                          std::size_t js = kCitySampleSize);

/// 16 cities, 325 births in eight and 100 in the other eight.
Scenario fragile_families_scenario(const std::string& path, OutcomeKind outcome, int replicates,
                                   std::uint64_t seed);

struct DensityRow {
  std::string frame;
  std::string scale;  // raw or log10
  std::string kind;   // quantile, bin, moment
  std::string label;
  double value = 0.0;
};

/// Quantiles, a 20-bin histogram and moments of each frame's sizes on the raw
/// and log10 scales.
std::vector<DensityRow> size_density_report(
    std::span<const std::pair<std::string, ClusterSizeFrame>> frames);

double sample_skewness(std::span<const double> values);

void write_density_csv(std::span<const DensityRow> rows, std::ostream& out);

/// scenario_id, frame, outcome, Js, design, method, L, discarded, rel_bias,
/// rrmse, cover50, cover95, relwidth50, relwidth95.
void write_report_header(std::ostream& out);
void write_report_rows(const MetricsReport& report, std::ostream& out);
/// Long form: scenario_id, frame, outcome, Js, design, method, metric, value.
void write_figure_header(std::ostream& out);
void write_figure_rows(const MetricsReport& report, std::ostream& out);

}  // namespace ppsb
