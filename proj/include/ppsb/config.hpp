#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppsb/harness.hpp"

namespace ppsb {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A named input file is missing or unreadable.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` run configuration. Lists are comma separated; `#`
/// starts a comment. Relative paths resolve against the config file's
/// directory.
struct RunConfig {
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir = ".";
  unsigned workers = 0;  // 0: hardware concurrency

  // Frames: poisson, gamma_multinomial, file, ff.
  std::vector<std::string> frames = {"poisson"};
  int clusters = 100;
  PoissonSource poisson;
  GammaMultinomialSource gamma_multinomial;
  std::filesystem::path frame_file;
  double frame_divisor = 1.0;
  std::filesystem::path ff_file;

  std::vector<OutcomeKind> outcomes = {OutcomeKind::Continuous};
  std::vector<std::size_t> js = {10, 50};
  std::vector<std::string> designs = {"frac0.1", "frac0.5", "n10", "n50"};
  int replicates = 100;
  std::vector<Method> methods = all_methods();
  DgpHyper hyper;
  MethodSettings settings;

  // Single-sample commands.
  std::filesystem::path population_file;
};

RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);

/// `fracR` (fixed fraction R) or `nK` (fixed count K).
WithinDesign parse_within(const std::string& label);

/// Source for a non-city frame name.
SizeSource frame_source(const RunConfig& config, const std::string& frame);

/// Scenario grid: frames x outcomes x Js x designs, with the city frame
/// contributing one designated-count scenario per outcome. Scenarios that
/// share a frame and outcome share one population seed.
std::vector<Scenario> build_grid(const RunConfig& config);

}  // namespace ppsb
