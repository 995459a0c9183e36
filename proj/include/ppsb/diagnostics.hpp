#pragma once

#include <string>
#include <vector>

namespace ppsb {

/// values[c][i]: iteration i of chain c. All chains must have equal length.
using ChainValues = std::vector<std::vector<double>>;

/// Split potential scale reduction factor. NaN when every draw is identical
/// (undefined); +inf when chains are internally constant but disagree.
double split_rhat(const ChainValues& values);

/// Multi-chain effective sample size with Geyer's initial monotone sequence.
/// NaN for constant draws.
double effective_sample_size(const ChainValues& values);

struct Diagnostics {
  std::vector<std::string> names;
  std::vector<double> rhat;
  std::vector<double> ess;
  int divergences = 0;

  /// Largest R-hat over parameters with a defined value.
  double max_rhat() const;
  /// Parameters whose R-hat is undefined.
  std::size_t undefined_rhat() const;
};

}  // namespace ppsb
