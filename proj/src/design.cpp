#include "ppsb/design.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

namespace ppsb {

std::string DesignSpec::label() const
{
  std::ostringstream out;
  if (const auto* f = std::get_if<FixedFraction>(&within))
    out << "frac" << f->rho;
  else if (const auto* c = std::get_if<FixedCount>(&within))
    out << "n" << c->n;
  else {
    const auto& d = std::get<DesignatedCounts>(within);
    out << "designated" << d.large_n << "x" << d.large_slots << "_" << d.small_n;
  }
  return out.str();
}

std::vector<std::size_t> TwoStageSample::nonsampled_ids() const
{
  std::vector<std::size_t> out;
  out.reserve(J - Js);
  std::size_t next = 0;
  for (const auto& c : clusters) {
    for (; next < c.id; ++next)
      out.push_back(next);
    next = c.id + 1;
  }
  for (; next < J; ++next)
    out.push_back(next);
  return out;
}

std::vector<std::int64_t> TwoStageSample::observed_sizes() const
{
  std::vector<std::int64_t> out;
  out.reserve(clusters.size());
  for (const auto& c : clusters)
    out.push_back(c.size);
  return out;
}

std::size_t TwoStageSample::unit_count() const
{
  std::size_t n = 0;
  for (const auto& c : clusters)
    n += c.n();
  return n;
}

std::vector<std::size_t> systematic_pps(std::span<const std::int64_t> sizes, std::size_t js,
                                        Rng& rng)
{
  if (js == 0 || js >= sizes.size())
    throw DesignError("systematic PPS needs 0 < Js < J");
  if (has_certainty_cluster(sizes, static_cast<int>(js)))
    throw DesignError("frame has a certainty cluster for Js=" + std::to_string(js));

  const double total =
      static_cast<double>(std::accumulate(sizes.begin(), sizes.end(), std::int64_t{0}));
  const double step = total / static_cast<double>(js);
  const double start = uniform01(rng) * step;  // in (0, step)
  auto order = random_permutation(sizes.size(), rng);

  std::vector<std::size_t> picked;
  picked.reserve(js);
  double cumulative = 0.0;
  std::size_t next = 0;
  for (auto id : order) {
    cumulative += static_cast<double>(sizes[id]);
    // A cluster's interval (cum - N_j, cum] is shorter than the step, so it
    // holds at most one selection point.
    if (next < js && start + static_cast<double>(next) * step <= cumulative) {
      picked.push_back(id);
      ++next;
    }
  }
  if (picked.size() != js)
    throw DesignError("systematic PPS selected the wrong number of clusters");
  std::sort(picked.begin(), picked.end());
  return picked;
}

std::vector<std::size_t> srs_within(std::int64_t size, std::int64_t n, Rng& rng)
{
  if (n < 1 || n > size)
    throw DesignError("within-cluster sample size must satisfy 1 <= n_j <= N_j (n_j=" +
                      std::to_string(n) + ", N_j=" + std::to_string(size) + ")");
  std::vector<std::size_t> ids(static_cast<std::size_t>(size));
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  // Partial Fisher-Yates: the first n slots are a uniform subset.
  for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
    auto j = static_cast<std::size_t>(
        uniform_int(static_cast<std::int64_t>(i), size - 1, rng));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(static_cast<std::size_t>(n));
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<std::int64_t> within_sizes(const DesignSpec& design,
                                       std::span<const std::int64_t> frame_sizes,
                                       std::span<const std::size_t> ids)
{
  std::vector<std::int64_t> n(ids.size());
  if (const auto* f = std::get_if<FixedFraction>(&design.within)) {
    for (std::size_t k = 0; k < ids.size(); ++k) {
      auto size = frame_sizes[ids[k]];
      n[k] = std::clamp<std::int64_t>(std::llround(f->rho * static_cast<double>(size)), 1, size);
    }
  } else if (const auto* c = std::get_if<FixedCount>(&design.within)) {
    std::fill(n.begin(), n.end(), c->n);
  } else {
    const auto& d = std::get<DesignatedCounts>(design.within);
    std::vector<std::size_t> rank(ids.size());
    std::iota(rank.begin(), rank.end(), std::size_t{0});
    std::sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
      bool la = d.designated_large.at(ids[a]);
      bool lb = d.designated_large.at(ids[b]);
      if (la != lb)
        return la;
      if (frame_sizes[ids[a]] != frame_sizes[ids[b]])
        return frame_sizes[ids[a]] > frame_sizes[ids[b]];
      return ids[a] < ids[b];
    });
    for (std::size_t r = 0; r < rank.size(); ++r)
      n[rank[r]] = r < d.large_slots ? d.large_n : d.small_n;
  }
  return n;
}

void validate_design(const DesignSpec& design, const ClusterSizeFrame& frame)
{
  const auto J = frame.cluster_count();
  if (design.js == 0 || design.js >= J)
    throw DesignError("design needs 0 < Js < J (Js=" + std::to_string(design.js) +
                      ", J=" + std::to_string(J) + ")");
  if (has_certainty_cluster(frame.sizes, static_cast<int>(design.js)))
    throw DesignError("frame has a certainty cluster for Js=" + std::to_string(design.js));
  if (const auto* f = std::get_if<FixedFraction>(&design.within)) {
    if (!(f->rho > 0.0 && f->rho <= 1.0))
      throw DesignError("sampling fraction must lie in (0, 1]");
  } else if (const auto* c = std::get_if<FixedCount>(&design.within)) {
    if (c->n < 1)
      throw DesignError("fixed count must be >= 1");
  } else {
    const auto& d = std::get<DesignatedCounts>(design.within);
    if (d.designated_large.size() != J)
      throw DesignError("designation flags must cover every cluster");
    if (d.large_n < 1 || d.small_n < 1)
      throw DesignError("designated counts must be >= 1");
  }
}

TwoStageSample draw_sample(const FinitePopulation& pop, const DesignSpec& design, Rng& rng)
{
  validate_design(design, pop.frame);
  const auto& sizes = pop.frame.sizes;
  auto ids = systematic_pps(sizes, design.js, rng);
  auto n = within_sizes(design, sizes, ids);

  TwoStageSample s;
  s.outcome = pop.outcome;
  s.N = pop.total();
  s.J = pop.cluster_count();
  s.Js = design.js;
  s.xbar_all.resize(s.J);
  for (std::size_t j = 0; j < s.J; ++j)
    s.xbar_all[j] = pop.cluster_xbar(j);
  s.xbar_pop = pop.population_xbar();

  const double N = static_cast<double>(s.N);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const auto id = ids[k];
    SampledCluster c;
    c.id = id;
    c.size = sizes[id];
    c.pi = static_cast<double>(design.js) * static_cast<double>(c.size) / N;
    c.xbar = s.xbar_all[id];
    c.unit_ids = srs_within(c.size, n[k], rng);
    c.pi_within = static_cast<double>(n[k]) / static_cast<double>(c.size);
    c.unit_weight = design_weight(s.N, s.Js, c.size, n[k]);
    const auto& units = pop.clusters[id];
    for (auto u : c.unit_ids) {
      c.x.push_back(units.x[u]);
      c.y.push_back(units.y[u]);
    }
    s.clusters.push_back(std::move(c));
  }
  return s;
}

double design_weight(std::int64_t N, std::size_t js, std::int64_t size, std::int64_t n)
{
  const auto num = static_cast<double>(N * size);
  const auto den = static_cast<double>(static_cast<std::int64_t>(js) * size * n);
  return num / den;
}

std::vector<double> unit_weights(const TwoStageSample& sample)
{
  std::vector<double> w;
  w.reserve(sample.unit_count());
  for (const auto& c : sample.clusters)
    w.insert(w.end(), c.n(), c.unit_weight);
  return w;
}

void write_sample(const TwoStageSample& sample, std::ostream& out)
{
  out << "cluster_id\tNj\tpi_j\tunit_id\tx\ty\tpi_i_given_j\n";
  out << std::setprecision(17);
  for (const auto& c : sample.clusters)
    for (std::size_t i = 0; i < c.n(); ++i)
      out << c.id << '\t' << c.size << '\t' << c.pi << '\t' << c.unit_ids[i] << '\t' << c.x[i]
          << '\t' << c.y[i] << '\t' << c.pi_within << '\n';
}

}  // namespace ppsb
