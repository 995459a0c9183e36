#pragma once

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "ppsb/config.hpp"

namespace ppsb {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitIo = 2,
  kExitStatistical = 3,
  kExitInterrupted = 130,
};

/// Overrides applied on top of a loaded config by command-line flags.
struct CommandOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> methods;
  std::optional<std::string> out_dir;
  std::optional<unsigned> workers;
  std::optional<std::string> dump_draws;
};

RunConfig apply_overrides(RunConfig config, const CommandOptions& options);

/// Random stream used to draw the single sample of `sample` and `estimate`.
Rng sample_rng(std::uint64_t seed);

/// Writes frame_<name>.txt and population_<name>_<outcome>.tsv for every
/// configured frame and outcome.
int cmd_generate(const RunConfig& config, std::ostream& log);

/// Draws one sample from the population file and writes sample.tsv.
int cmd_sample(const RunConfig& config, std::ostream& log);

/// One method on one sample of the population file; prints a JSON line.
int cmd_estimate(const RunConfig& config, const std::string& method, std::ostream& out,
                 std::ostream& log, const std::optional<std::string>& dump_draws = {});

/// Runs the scenario grid, writing report.csv and figure_data.csv.
int cmd_simulate(const RunConfig& config, std::ostream& log,
                 const std::atomic<bool>* cancel = nullptr);

/// Writes size_density.csv for the configured frames.
int cmd_density(const RunConfig& config, std::ostream& log);

/// Full command-line entry point.
int run_cli(int argc, char** argv, const std::atomic<bool>* cancel = nullptr);

}  // namespace ppsb
