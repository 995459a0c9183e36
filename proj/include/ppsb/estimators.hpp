#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>

#include "ppsb/design.hpp"

namespace ppsb {

class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double v) const { return lo <= v && v <= hi; }
};

inline constexpr double kZ50 = 0.6744897501960817;
inline constexpr double kZ95 = 1.959963984540054;

/// Normal-theory interval point +/- z * sqrt(variance).
Interval normal_interval(double point, double variance, double z);

struct VarianceBreakdown {
  double first_stage = 0.0;
  double second_stage = 0.0;
  double total = 0.0;
};

struct DesignEstimate {
  double point = 0.0;
  std::optional<VarianceBreakdown> variance;
  std::optional<Interval> ci50;
  std::optional<Interval> ci95;
};

enum class DesignEstimator { Hajek, Greg };

struct EstimatorOptions {
  /// Second-stage term uses at most `subsample_units` per cluster once the
  /// sample holds more than `subsample_cap` units.
  std::size_t subsample_cap = 5000;
  std::int64_t subsample_units = 100;
  std::uint64_t subsample_seed = 0;
  /// When set, GREG uses this slope instead of the fitted one.
  std::optional<double> greg_fixed_slope;
};

/// Two-stage Hajek ratio estimator with its linearized variance.
DesignEstimate hajek(const TwoStageSample& sample, const EstimatorOptions& options = {});

/// GREG assisted by a weighted linear fit of y on (1, x), calibrated to the
/// known population size and population x mean. Continuous outcomes only.
DesignEstimate greg(const TwoStageSample& sample, const EstimatorOptions& options = {});

/// Linearized two-stage variance. The first-stage part treats PSU selection
/// as with-replacement PPS (Hansen-Hurwitz ultimate-cluster form, which
/// already carries the second-stage contribution in expectation); the
/// second-stage part is sum_j V_j / pi_j. Empty when Js < 2.
std::optional<VarianceBreakdown> design_variance(const TwoStageSample& sample,
                                                 DesignEstimator kind,
                                                 const EstimatorOptions& options = {});

}  // namespace ppsb
