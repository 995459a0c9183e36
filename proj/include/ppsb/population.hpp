#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ppsb/rng.hpp"

namespace ppsb {

enum class OutcomeKind { Continuous, Binary };

std::string to_string(OutcomeKind kind);
OutcomeKind outcome_from_string(const std::string& name);

/// Raised when a frame or population cannot be built from the inputs.
class PopulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PoissonSource {
  double rate = 500.0;
};

/// Candidate sizes scale * Gamma(shape, rate), then J multinomial draws over
/// the candidates with Dirichlet(concentration) probabilities.
struct GammaMultinomialSource {
  double shape = 10.0;
  double rate = 1.0;
  double scale = 100.0;
  double concentration = 10.0;
};

/// One size per line (first token); sizes are divided by `divisor` and
/// rounded to the nearest integer with a floor of 1.
struct FileSource {
  std::string path;
  double divisor = 1.0;
};

using SizeSource = std::variant<PoissonSource, GammaMultinomialSource, FileSource>;

std::string source_name(const SizeSource& source);

struct ClusterSizeFrame {
  std::vector<std::int64_t> sizes;
  SizeSource source;

  std::size_t cluster_count() const { return sizes.size(); }
  std::int64_t total() const;
};

/// True if any cluster would be a certainty selection, js * N_j / N >= 1.
bool has_certainty_cluster(std::span<const std::int64_t> sizes, int js);

/// Rounds raw sizes (already scaled) to counts with a floor of 1.
std::vector<std::int64_t> round_sizes(std::span<const double> raw);

/// First numeric token of each non-blank, non-`#` line.
std::vector<double> read_size_column(const std::string& path);

constexpr int kMaxFrameAttempts = 10000;

/// Draws J cluster sizes from `source`, redrawing the whole frame until no
/// cluster is a certainty selection at `js_max`. File frames are never
/// redrawn: a certainty cluster there is an error.
ClusterSizeFrame generate_frame(const SizeSource& source, int clusters, int js_max, Rng& rng,
                                int max_attempts = kMaxFrameAttempts);

/// Coefficients of the data-generating process.
struct DgpCoefficients {
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double gamma0 = 0.0;
  double gamma1 = 0.0;
  double sigma_beta0 = 0.0;
  double sigma_beta1 = 0.0;
  double sigma_y = 0.0;
};

struct DgpParams {
  DgpCoefficients coef;
  std::vector<double> beta0;
  std::vector<double> beta1;  // empty for binary outcomes
};

/// Scales of the hyperprior the coefficients are drawn from.
struct DgpHyper {
  double coef_sd = 1.0;
  double sigma_beta_scale = 0.5;
  double sigma_y_scale = 0.75;
};

DgpCoefficients draw_coefficients(const DgpHyper& hyper, Rng& rng);

/// Cluster effects from the hierarchical equations, using log sizes centered
/// over all J clusters.
DgpParams draw_cluster_effects(const ClusterSizeFrame& frame, OutcomeKind outcome,
                               const DgpCoefficients& coef, Rng& rng);

struct ClusterUnits {
  std::vector<double> x;
  std::vector<double> y;
};

struct TruthRecord {
  double ybar = 0.0;
  std::vector<double> cluster_means;
};

struct FinitePopulation {
  ClusterSizeFrame frame;
  OutcomeKind outcome = OutcomeKind::Continuous;
  std::vector<ClusterUnits> clusters;
  TruthRecord truth;
  std::optional<DgpParams> params;

  std::int64_t total() const { return frame.total(); }
  std::size_t cluster_count() const { return frame.cluster_count(); }
  double cluster_xbar(std::size_t j) const;
  double population_xbar() const;
};

/// Exact truth from the unit values.
TruthRecord compute_truth(const std::vector<ClusterUnits>& clusters);

/// x is a discrete uniform on [20, 45] centered at its realized population
/// mean; y follows the continuous or binary outcome model.
FinitePopulation generate_population(const ClusterSizeFrame& frame, const DgpParams& params,
                                     OutcomeKind outcome, Rng& rng);
FinitePopulation generate_population(const ClusterSizeFrame& frame, const DgpHyper& hyper,
                                     OutcomeKind outcome, Rng& rng);

/// Log sizes minus the mean log size of `reference`.
std::vector<double> centered_log_sizes(std::span<const double> sizes,
                                       std::span<const double> reference);
std::vector<double> centered_log_sizes(std::span<const double> sizes);
double mean_log_size(std::span<const double> reference);

std::vector<double> as_doubles(std::span<const std::int64_t> values);

void write_frame(const ClusterSizeFrame& frame, std::ostream& out);
/// Tab-separated cluster_id, unit_id, x, y with a leading `# outcome=` line.
void write_population(const FinitePopulation& pop, std::ostream& out);
FinitePopulation read_population(std::istream& in);

}  // namespace ppsb
