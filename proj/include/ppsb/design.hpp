#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ppsb/population.hpp"
#include "ppsb/rng.hpp"

namespace ppsb {

class DesignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// n_j = round(rho * N_j), clamped to [1, N_j].
struct FixedFraction {
  double rho = 0.1;
};

/// n_j = n in every sampled cluster; an error if some sampled N_j < n.
struct FixedCount {
  std::int64_t n = 10;
};

/// Two within-cluster sample sizes. Sampled clusters are ranked by
/// (designated large first, larger N_j first, lower id first); the first
/// `large_slots` receive `large_n`, the rest `small_n`.
struct DesignatedCounts {
  std::int64_t large_n = 325;
  std::int64_t small_n = 100;
  std::size_t large_slots = 8;
  std::vector<bool> designated_large;  // one flag per frame cluster
};

using WithinDesign = std::variant<FixedFraction, FixedCount, DesignatedCounts>;

struct DesignSpec {
  std::size_t js = 10;
  WithinDesign within = FixedFraction{};

  std::string label() const;
};

struct SampledCluster {
  std::size_t id = 0;
  std::int64_t size = 0;          // N_j
  double pi = 0.0;                // first-stage inclusion probability
  double pi_within = 0.0;         // n_j / N_j
  double unit_weight = 0.0;       // 1 / (pi * pi_within)
  double xbar = 0.0;              // cluster mean of x over all N_j units
  std::vector<std::size_t> unit_ids;
  std::vector<double> x;
  std::vector<double> y;

  std::size_t n() const { return y.size(); }
};

/// Everything the analyst observes, plus design metadata. Sizes of
/// nonsampled clusters are not stored.
struct TwoStageSample {
  OutcomeKind outcome = OutcomeKind::Continuous;
  std::int64_t N = 0;
  std::size_t J = 0;
  std::size_t Js = 0;
  std::vector<SampledCluster> clusters;  // ascending id
  std::vector<double> xbar_all;          // x cluster means for all J clusters
  double xbar_pop = 0.0;                 // population mean of x

  std::vector<std::size_t> nonsampled_ids() const;
  std::vector<std::int64_t> observed_sizes() const;
  std::size_t unit_count() const;
};

/// Randomized systematic PPS: random cluster order, uniform start on
/// (0, N/js], step N/js along the cumulative sizes. Returns sorted ids.
std::vector<std::size_t> systematic_pps(std::span<const std::int64_t> sizes, std::size_t js,
                                        Rng& rng);

/// Simple random sample without replacement of n of the unit ids 0..size-1,
/// sorted.
std::vector<std::size_t> srs_within(std::int64_t size, std::int64_t n, Rng& rng);

/// Within-cluster sample sizes for the sampled clusters (aligned with `ids`).
std::vector<std::int64_t> within_sizes(const DesignSpec& design,
                                       std::span<const std::int64_t> frame_sizes,
                                       std::span<const std::size_t> ids);

void validate_design(const DesignSpec& design, const ClusterSizeFrame& frame);

TwoStageSample draw_sample(const FinitePopulation& pop, const DesignSpec& design, Rng& rng);

/// N N_j / (js N_j n_j) from exact integer products, so that designs with
/// equal n_j give bit-identical weights.
double design_weight(std::int64_t N, std::size_t js, std::int64_t size, std::int64_t n);

/// Unit weight 1 / (pi_j * pi_{i|j}) for every sampled unit, cluster by cluster.
std::vector<double> unit_weights(const TwoStageSample& sample);

/// Header: cluster_id, Nj, pi_j, unit_id, x, y, pi_i_given_j.
void write_sample(const TwoStageSample& sample, std::ostream& out);

}  // namespace ppsb
