#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ppsb/harness.hpp"
#include "support.hpp"

using namespace ppsb;
using namespace ppsb::testing;

namespace {

const std::string kCityFile = std::string(PPSB_DATA_DIR) + "/ff_cities.txt";

MethodEstimate est(double point, double lo50, double hi50, double lo95, double hi95)
{
  return {point, {lo50, hi50}, {lo95, hi95}};
}

MethodSettings fast_settings()
{
  MethodSettings s;
  s.schedule.chains = 2;
  s.schedule.warmup = 200;
  s.schedule.samples = 200;
  return s;
}

std::vector<std::string> lines_of(const std::string& text)
{
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);)
    out.push_back(l);
  return out;
}

}  // namespace

TEST(Methods, NamesRoundTrip)
{
  for (Method m : all_methods())
    EXPECT_EQ(method_from_string(to_string(m)), m);
  EXPECT_THROW(method_from_string("mrp"), std::invalid_argument);
  auto list = parse_methods("bb,hajek,bb");
  EXPECT_EQ(list, (std::vector<Method>{Method::BayesianBootstrap, Method::Hajek}));
  EXPECT_FALSE(supports(Method::Greg, OutcomeKind::Binary));
  EXPECT_TRUE(supports(Method::ClusterInds, OutcomeKind::Binary));
}

TEST(Percentile, LinearInterpolation)
{
  EXPECT_DOUBLE_EQ(percentile({3, 1, 2, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(percentile({3, 1, 2, 4}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(percentile({3, 1, 2, 4}, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(percentile({0, 10}, 0.25), 2.5);
  EXPECT_THROW(percentile({}, 0.5), std::invalid_argument);
}

TEST(Metrics, ExactEstimatesGiveZeroError)
{
  std::vector<MethodEstimate> e(5, est(2.0, 1.9, 2.1, 1.5, 2.5));
  auto m = compute_metrics(e, 2.0);
  EXPECT_EQ(m.L, 5u);
  EXPECT_DOUBLE_EQ(m.rel_bias, 0.0);
  EXPECT_DOUBLE_EQ(m.rrmse, 0.0);
  EXPECT_DOUBLE_EQ(m.cover50, 1.0);
  EXPECT_DOUBLE_EQ(m.cover95, 1.0);
  EXPECT_NEAR(m.relwidth50, 0.1, 1e-15);
  EXPECT_NEAR(m.relwidth95, 0.5, 1e-15);
}

TEST(Metrics, SymmetricErrorsCancelInBiasOnly)
{
  std::vector<MethodEstimate> e;
  for (int i = 0; i < 10; ++i) {
    const double p = i % 2 ? 1.1 : 0.9;
    e.push_back(est(p, p - 0.01, p + 0.01, p - 0.2, p + 0.2));
  }
  auto m = compute_metrics(e, 1.0);
  EXPECT_NEAR(m.rel_bias, 0.0, 1e-15);
  EXPECT_NEAR(m.rrmse, 0.1, 1e-15);
  EXPECT_DOUBLE_EQ(m.cover50, 0.0);
  EXPECT_DOUBLE_EQ(m.cover95, 1.0);
}

TEST(Metrics, AgreesWithDirectRecomputation)
{
  Rng rng(5);
  const double truth = -3.7;
  std::vector<MethodEstimate> e;
  for (int i = 0; i < 20; ++i) {
    const double p = truth + std_normal(rng);
    const double w = 0.5 + uniform01(rng);
    e.push_back(est(p, p - w, p + w, p - 3 * w, p + 3 * w));
  }
  double bias = 0, sq = 0, c50 = 0, c95 = 0, w50 = 0, w95 = 0;
  for (const auto& x : e) {
    const double r = (truth - x.point) / truth;
    bias += r / 20;
    sq += r * r / 20;
    c50 += (x.ci50.lo <= truth && truth <= x.ci50.hi) / 20.0;
    c95 += (x.ci95.lo <= truth && truth <= x.ci95.hi) / 20.0;
    w50 += (x.ci50.hi - x.ci50.lo) / std::abs(truth) / 20;
    w95 += (x.ci95.hi - x.ci95.lo) / std::abs(truth) / 20;
  }
  auto m = compute_metrics(e, truth);
  EXPECT_NEAR(m.rel_bias, bias, 1e-12);
  EXPECT_NEAR(m.rrmse, std::sqrt(sq), 1e-12);
  EXPECT_NEAR(m.cover50, c50, 1e-12);
  EXPECT_NEAR(m.cover95, c95, 1e-12);
  EXPECT_NEAR(m.relwidth50, w50, 1e-12);
  EXPECT_NEAR(m.relwidth95, w95, 1e-12);
  EXPECT_GT(m.relwidth95, 0.0);
}

TEST(Metrics, DegenerateInputsAreRejected)
{
  std::vector<MethodEstimate> none;
  EXPECT_THROW(compute_metrics(none, 1.0), std::invalid_argument);
  std::vector<MethodEstimate> one{est(0, -1, 1, -2, 2)};
  EXPECT_THROW(compute_metrics(one, 0.0), std::invalid_argument);
}

TEST(Metrics, ZeroWidthIntervalCoversOnlyExactHit)
{
  EXPECT_TRUE(covers({5.0, 5.0}, 5.0, 5.0));
  EXPECT_TRUE(covers({5.0, 5.0}, 5.0, 5.0 * (1 + 1e-13)));
  EXPECT_FALSE(covers({5.0, 5.0}, 5.0, 5.001));
  EXPECT_TRUE(covers({4.0, 6.0}, 5.5, 4.0));
}

TEST(EstimateMethod, ClassicalMatchesEstimatorModule)
{
  auto pop = poisson_population(60, 10, OutcomeKind::Continuous, 8);
  Rng rng(9);
  auto sample = draw_sample(pop, DesignSpec{10, FixedCount{10}}, rng);
  MethodSettings settings;
  auto out = estimate_method(Method::Hajek, pop, sample, settings, 123);
  ASSERT_TRUE(out.estimate);
  auto direct = hajek(sample, EstimatorOptions{.subsample_seed = 123});
  EXPECT_EQ(out.estimate->point, direct.point);
  EXPECT_EQ(out.estimate->ci95.lo, direct.ci95->lo);
  EXPECT_EQ(out.estimate->ci50.hi, direct.ci50->hi);
  EXPECT_TRUE(estimate_method(Method::Greg, pop, sample, settings, 1).estimate);

  auto bin = poisson_population(60, 10, OutcomeKind::Binary, 10);
  auto bsample = draw_sample(bin, DesignSpec{10, FixedCount{10}}, rng);
  EXPECT_THROW(estimate_method(Method::Greg, bin, bsample, settings, 1), std::invalid_argument);
}

TEST(EstimateMethod, BayesianIsSeedDeterministicAndDumpsDraws)
{
  auto pop = poisson_population(60, 10, OutcomeKind::Continuous, 11);
  Rng rng(12);
  auto sample = draw_sample(pop, DesignSpec{10, FixedCount{10}}, rng);
  std::ostringstream dump;
  auto a = estimate_method(Method::BayesianBootstrap, pop, sample, fast_settings(), 5, &dump);
  auto b = estimate_method(Method::BayesianBootstrap, pop, sample, fast_settings(), 5);
  ASSERT_TRUE(a.estimate && b.estimate);
  EXPECT_EQ(a.estimate->point, b.estimate->point);
  EXPECT_LE(a.estimate->ci95.lo, a.estimate->ci50.lo);
  EXPECT_LE(a.estimate->ci50.hi, a.estimate->ci95.hi);
  EXPECT_GT(a.size_discrepancy, 0.0);
  EXPECT_EQ(lines_of(dump.str()).front(), "chain\titer\tparameter\tvalue");

  auto k = estimate_method(Method::KnowSizes, pop, sample, fast_settings(), 5);
  ASSERT_TRUE(k.estimate);
  EXPECT_DOUBLE_EQ(k.size_discrepancy, 0.0);
}

TEST(Scenario, GregIsExactWithoutNoise)
{
  // sigma_y = 0 and no cluster effects: y is exactly linear in x, which GREG
  // reproduces at the population x mean.
  auto pop = population_from(frame_of(std::vector<std::int64_t>(50, 80)),
                             OutcomeKind::Continuous, coefficients(2.0, 0.3, 0, 0, 0, 0, 0), 13);
  Scenario s;
  s.id = "exact";
  s.design = DesignSpec{10, FixedCount{10}};
  s.replicates = 20;
  s.seed = 14;
  const Method greg_only[] = {Method::Greg};
  auto report = run_scenario(s, pop, greg_only, MethodSettings{});
  const auto* g = report.find(Method::Greg);
  ASSERT_TRUE(g && g->metrics);
  EXPECT_LT(g->metrics->rrmse, 1e-10);
  EXPECT_EQ(g->discarded, 0u);
}

TEST(Scenario, DeterministicAndIndependentOfWorkerCount)
{
  Scenario s;
  s.id = "det";
  s.clusters = 40;
  s.js_max = 10;
  s.design = DesignSpec{10, FixedCount{10}};
  s.replicates = 6;
  s.population_seed = 15;
  s.seed = 16;
  const Method methods[] = {Method::Hajek, Method::Greg, Method::Lognormal};
  auto one = run_scenario(s, methods, fast_settings(), RunOptions{.workers = 1});
  auto many = run_scenario(s, methods, fast_settings(), RunOptions{.workers = 3});
  std::ostringstream a, b;
  write_report_rows(one, a);
  write_report_rows(many, b);
  EXPECT_EQ(a.str(), b.str());
  for (std::size_t m = 0; m < one.methods.size(); ++m)
    for (std::size_t r = 0; r < 6; ++r) {
      ASSERT_EQ(one.methods[m].replicates[r].has_value(),
                many.methods[m].replicates[r].has_value());
      if (one.methods[m].replicates[r])
        EXPECT_EQ(one.methods[m].replicates[r]->point, many.methods[m].replicates[r]->point);
    }
  EXPECT_FALSE(one.truncated);
  EXPECT_EQ(one.frame, "poisson");
}

TEST(Scenario, BinarySkipsGreg)
{
  Scenario s;
  s.clusters = 40;
  s.js_max = 10;
  s.outcome = OutcomeKind::Binary;
  s.design = DesignSpec{10, FixedCount{10}};
  s.replicates = 3;
  const Method methods[] = {Method::Hajek, Method::Greg};
  auto report = run_scenario(s, methods, MethodSettings{});
  EXPECT_EQ(report.methods.size(), 1u);
  EXPECT_EQ(report.find(Method::Greg), nullptr);
}

TEST(Scenario, CancellationTruncates)
{
  Scenario s;
  s.clusters = 40;
  s.js_max = 10;
  s.design = DesignSpec{10, FixedCount{10}};
  s.replicates = 50;
  std::atomic<bool> cancel{false};
  RunOptions opts;
  opts.cancel = &cancel;
  opts.progress = [&](std::size_t done, std::size_t) {
    if (done == 5)
      cancel = true;
  };
  const Method methods[] = {Method::Hajek};
  auto report = run_scenario(s, methods, MethodSettings{}, opts);
  EXPECT_TRUE(report.truncated);
  EXPECT_LT(report.methods[0].attempted, 50u);
  EXPECT_GE(report.methods[0].attempted, 5u);
}

TEST(CityFrame, CertaintyCitiesRemovedLargestFirst)
{
  auto city = read_city_frame(kCityFile);
  EXPECT_EQ(city.frame.cluster_count(), 74u);
  EXPECT_EQ(city.removed.size(), 3u);
  EXPECT_FALSE(has_certainty_cluster(city.frame.sizes, 16));
  EXPECT_EQ(city.designated_large.size(), 74u);
  EXPECT_EQ(city.names.size(), 74u);
  const auto n = city.frame.total();
  for (auto size : city.frame.sizes)
    EXPECT_LT(16 * size, n);
}

TEST(CityFrame, ShortFileIsRejected)
{
  const auto tmp = std::filesystem::temp_directory_path() / "ppsb_short_cities.txt";
  {
    std::ifstream in(kCityFile);
    std::ofstream out(tmp);
    int rows = 0;
    for (std::string line; std::getline(in, line);) {
      const bool data = !line.empty() && line[0] != '#';
      if (data && ++rows > 76)
        break;
      out << line << '\n';
    }
  }
  EXPECT_THROW(read_city_frame(tmp.string()), PopulationError);
  std::filesystem::remove(tmp);
}

TEST(CityFrame, ScenarioDrawsThreeThousandFourHundredBirths)
{
  auto s = fragile_families_scenario(kCityFile, OutcomeKind::Continuous, 1, 3);
  auto pop = scenario_population(s);
  Rng rng(4);
  auto sample = draw_sample(pop, s.design, rng);
  EXPECT_EQ(sample.Js, 16u);
  EXPECT_EQ(sample.unit_count(), 3400u);
  EXPECT_EQ(s.frame_name, "ff");
}

TEST(Density, PoissonAndCityShapes)
{
  Rng rng(17);
  auto poisson = generate_frame(PoissonSource{}, 100, 50, rng);
  auto city = read_city_frame(kCityFile).frame;
  std::vector<std::pair<std::string, ClusterSizeFrame>> frames{{"poisson", poisson},
                                                               {"ff", city},
                                                               {"empty", ClusterSizeFrame{}}};
  auto rows = size_density_report(frames);
  auto value = [&](const std::string& f, const std::string& scale, const std::string& label) {
    for (const auto& r : rows)
      if (r.frame == f && r.scale == scale && r.label == label)
        return r.value;
    ADD_FAILURE() << f << " " << scale << " " << label;
    return std::nan("");
  };
  EXPECT_NEAR(value("poisson", "raw", "q0.5"), 500.0, 15.0);
  EXPECT_NEAR(value("poisson", "raw", "mean"), 500.0, 10.0);
  EXPECT_LT(std::abs(value("poisson", "raw", "skewness")), 1.0);
  EXPECT_GT(value("ff", "raw", "skewness"), 1.0);
  EXPECT_EQ(value("ff", "raw", "n"), 74.0);
  double binned = 0.0;
  for (const auto& r : rows)
    if (r.frame == "ff" && r.scale == "log10" && r.kind == "bin")
      binned += r.value;
  EXPECT_EQ(binned, 74.0);
  for (const auto& r : rows)
    EXPECT_NE(r.frame, "empty");
  std::ostringstream csv;
  write_density_csv(rows, csv);
  EXPECT_EQ(lines_of(csv.str()).size(), rows.size() + 1);
}

TEST(Density, SkewnessOfKnownSets)
{
  const double sym[] = {1, 2, 3, 4, 5};
  EXPECT_NEAR(sample_skewness(sym), 0.0, 1e-15);
  const double right[] = {0, 0, 0, 1};
  // m3 / m2^1.5 with p = 1/4: (1 - 2p) / sqrt(p (1 - p))
  EXPECT_NEAR(sample_skewness(right), 0.5 / std::sqrt(0.1875), 1e-12);
}

TEST(Csv, ReportSchema)
{
  Scenario s;
  s.id = "csv";
  s.clusters = 40;
  s.js_max = 10;
  s.design = DesignSpec{10, FixedFraction{0.1}};
  s.replicates = 4;
  const Method methods[] = {Method::Hajek, Method::Greg};
  auto report = run_scenario(s, methods, MethodSettings{});
  std::ostringstream out, fig;
  write_report_header(out);
  write_report_rows(report, out);
  auto l = lines_of(out.str());
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[0],
            "scenario_id,frame,outcome,Js,design,method,L,discarded,rel_bias,rrmse,cover50,"
            "cover95,relwidth50,relwidth95");
  EXPECT_EQ(l[1].rfind("csv,poisson,continuous,10,frac0.1,hajek,4,0,", 0), 0u) << l[1];
  write_figure_header(fig);
  write_figure_rows(report, fig);
  auto f = lines_of(fig.str());
  EXPECT_EQ(f[0], "scenario_id,frame,outcome,Js,design,method,metric,value");
  EXPECT_GT(f.size(), 2u * 6u);
}
