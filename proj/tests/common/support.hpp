#pragma once

#include <cstdint>
#include <vector>

#include "ppsb/design.hpp"
#include "ppsb/population.hpp"

namespace ppsb::testing {

inline ClusterSizeFrame frame_of(std::vector<std::int64_t> sizes)
{
  return ClusterSizeFrame{std::move(sizes), PoissonSource{}};
}

/// Coefficients with every scale set explicitly.
inline DgpCoefficients coefficients(double a0, double a1, double g0, double g1, double sb0,
                                    double sb1, double sy)
{
  return DgpCoefficients{a0, a1, g0, g1, sb0, sb1, sy};
}

inline FinitePopulation population_from(const ClusterSizeFrame& frame, OutcomeKind outcome,
                                        const DgpCoefficients& coef, std::uint64_t seed)
{
  Rng rng(seed);
  auto params = draw_cluster_effects(frame, outcome, coef, rng);
  return generate_population(frame, params, outcome, rng);
}

inline FinitePopulation poisson_population(int clusters, int js_max, OutcomeKind outcome,
                                           std::uint64_t seed)
{
  Rng rng(seed);
  auto frame = generate_frame(PoissonSource{500.0}, clusters, js_max, rng);
  return generate_population(frame, DgpHyper{}, outcome, rng);
}

}  // namespace ppsb::testing
