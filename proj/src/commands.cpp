#include "ppsb/commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

namespace ppsb {

namespace fs = std::filesystem;

RunConfig apply_overrides(RunConfig config, const CommandOptions& options)
{
  if (options.seed)
    config.seed = options.seed;
  if (options.methods) {
    try {
      config.methods = parse_methods(*options.methods);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (options.out_dir)
    config.out_dir = *options.out_dir;
  if (options.workers)
    config.workers = *options.workers;
  if (!config.seed)
    throw ConfigError("a seed is required (config key 'seed' or --seed)");
  return config;
}

Rng sample_rng(std::uint64_t seed)
{
  return make_rng(seed, 0);
}

namespace {

std::ofstream open_output(const fs::path& path)
{
  std::error_code ec;
  if (path.has_parent_path())
    fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path.string());
  return out;
}

void check_written(std::ofstream& out, const fs::path& path)
{
  out.flush();
  if (!out)
    throw IoError("write failed for " + path.string());
}

unsigned worker_count(const RunConfig& config)
{
  if (config.workers > 0)
    return config.workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

FinitePopulation load_population(const RunConfig& config)
{
  if (config.population_file.empty())
    throw ConfigError("population_file is required");
  std::ifstream in(config.population_file);
  if (!in)
    throw IoError("cannot read " + config.population_file.string());
  return read_population(in);
}

DesignSpec single_design(const RunConfig& config, const FinitePopulation& pop)
{
  DesignSpec design{config.js.front(), parse_within(config.designs.front())};
  validate_design(design, pop.frame);
  return design;
}

}  // namespace

int cmd_generate(const RunConfig& config, std::ostream& log)
{
  const auto grid = build_grid(config);
  std::map<std::uint64_t, bool> written;
  for (const auto& s : grid) {
    if (written.count(s.population_seed))
      continue;
    written[s.population_seed] = true;
    const auto pop = scenario_population(s);
    const std::string frame = s.frame_name.empty() ? source_name(pop.frame.source) : s.frame_name;
    const fs::path frame_path = config.out_dir / ("frame_" + frame + ".txt");
    const fs::path pop_path =
        config.out_dir / ("population_" + frame + "_" + to_string(pop.outcome) + ".tsv");
    {
      auto out = open_output(frame_path);
      write_frame(pop.frame, out);
      check_written(out, frame_path);
    }
    {
      auto out = open_output(pop_path);
      write_population(pop, out);
      check_written(out, pop_path);
    }
    log << "generated " << frame << " J=" << pop.cluster_count() << " N=" << pop.total()
        << " outcome=" << to_string(pop.outcome) << " ybar=" << pop.truth.ybar << " -> "
        << pop_path.string() << '\n';
  }
  return kExitOk;
}

int cmd_sample(const RunConfig& config, std::ostream& log)
{
  const auto pop = load_population(config);
  const auto design = single_design(config, pop);
  Rng rng = sample_rng(*config.seed);
  const auto sample = draw_sample(pop, design, rng);
  const fs::path path = config.out_dir / "sample.tsv";
  auto out = open_output(path);
  write_sample(sample, out);
  check_written(out, path);
  log << "sampled Js=" << sample.Js << " units=" << sample.unit_count() << " -> " << path.string()
      << '\n';
  return kExitOk;
}

int cmd_estimate(const RunConfig& config, const std::string& method_name, std::ostream& out,
                 std::ostream& log, const std::optional<std::string>& dump_draws)
{
  Method method;
  try {
    method = method_from_string(method_name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto pop = load_population(config);
  if (!supports(method, pop.outcome))
    throw ConfigError(to_string(method) + " is for continuous outcomes only");
  const auto design = single_design(config, pop);
  Rng rng = sample_rng(*config.seed);
  const auto sample = draw_sample(pop, design, rng);

  std::ofstream draws;
  if (dump_draws)
    draws = open_output(*dump_draws);
  const auto method_seed = derive_seed(*config.seed, 1 + static_cast<std::uint64_t>(method));
  const auto result = estimate_method(method, pop, sample, config.settings, method_seed,
                                      dump_draws ? &draws : nullptr);

  nlohmann::json j;
  j["method"] = to_string(method);
  j["outcome"] = to_string(pop.outcome);
  j["Js"] = sample.Js;
  j["units"] = sample.unit_count();
  j["truth"] = pop.truth.ybar;
  j["status"] = result.estimate ? "ok" : "discarded";
  if (result.estimate) {
    j["point"] = result.estimate->point;
    j["ci50"] = {result.estimate->ci50.lo, result.estimate->ci50.hi};
    j["ci95"] = {result.estimate->ci95.lo, result.estimate->ci95.hi};
  } else {
    j["failure"] = result.failure;
  }
  if (result.diagnostics) {
    const auto& d = *result.diagnostics;
    double min_ess = std::numeric_limits<double>::infinity();
    for (double e : d.ess)
      if (!std::isnan(e))
        min_ess = std::min(min_ess, e);
    j["diagnostics"] = {{"max_rhat", d.max_rhat()},
                        {"min_ess", min_ess},
                        {"divergences", d.divergences},
                        {"iterations_per_chain", result.iterations_per_chain},
                        {"size_discrepancy", result.size_discrepancy}};
  }
  out << j.dump() << '\n';
  if (!result.estimate) {
    log << "estimate discarded: " << result.failure << '\n';
    return kExitStatistical;
  }
  return kExitOk;
}

int cmd_simulate(const RunConfig& config, std::ostream& log, const std::atomic<bool>* cancel)
{
  const auto grid = build_grid(config);
  const fs::path report_path = config.out_dir / "report.csv";
  const fs::path figure_path = config.out_dir / "figure_data.csv";
  auto report = open_output(report_path);
  auto figure = open_output(figure_path);
  write_report_header(report);
  write_figure_header(figure);

  std::map<std::uint64_t, FinitePopulation> populations;
  bool any_cell = false;
  bool truncated = false;
  RunOptions options;
  options.workers = worker_count(config);
  options.cancel = cancel;

  for (std::size_t i = 0; i < grid.size() && !truncated; ++i) {
    const auto& s = grid[i];
    auto it = populations.find(s.population_seed);
    if (it == populations.end())
      it = populations.emplace(s.population_seed, scenario_population(s)).first;
    options.progress = [&](std::size_t done, std::size_t total) {
      if (done == total || done % 10 == 0)
        log << "[" << i + 1 << "/" << grid.size() << "] " << s.id << ": " << done << "/"
            << total << " replicates\n";
    };
    const auto r = run_scenario(s, it->second, config.methods, config.settings, options);
    write_report_rows(r, report);
    write_figure_rows(r, figure);
    report.flush();
    figure.flush();
    for (const auto& m : r.methods)
      any_cell = any_cell || m.metrics.has_value();
    truncated = r.truncated;
  }
  if (truncated) {
    report << "# truncated\n";
    figure << "# truncated\n";
  }
  check_written(report, report_path);
  check_written(figure, figure_path);
  log << "wrote " << report_path.string() << " and " << figure_path.string() << '\n';
  if (truncated)
    return kExitInterrupted;
  if (!any_cell) {
    log << "every cell was discarded\n";
    return kExitStatistical;
  }
  return kExitOk;
}

int cmd_density(const RunConfig& config, std::ostream& log)
{
  if (!config.seed)
    throw ConfigError("a seed is required");
  std::vector<std::pair<std::string, ClusterSizeFrame>> frames;
  const int js_max = static_cast<int>(*std::max_element(config.js.begin(), config.js.end()));
  std::uint64_t index = 0;
  for (const auto& f : config.frames) {
    Rng rng = make_rng(*config.seed, index++);
    if (f == "ff")
      frames.emplace_back(f, read_city_frame(config.ff_file.string()).frame);
    else
      frames.emplace_back(f, generate_frame(frame_source(config, f),
                                            f == "file" ? 0 : config.clusters, js_max, rng));
  }
  const auto rows = size_density_report(frames);
  const fs::path path = config.out_dir / "size_density.csv";
  auto out = open_output(path);
  write_density_csv(rows, out);
  check_written(out, path);
  log << "wrote " << rows.size() << " rows to " << path.string() << '\n';
  return kExitOk;
}

int run_cli(int argc, char** argv, const std::atomic<bool>* cancel)
{
  CLI::App app{"Two-stage PPS cluster sampling: design-based and Bayesian estimation"};
  app.require_subcommand(1);

  std::string config_path;
  CommandOptions opts;
  std::uint64_t seed = 0;
  std::string methods, out_dir, dump;
  unsigned workers = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration file")->required();
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--out-dir", out_dir, "output directory");
  };
  auto* gen = app.add_subcommand("generate", "write frame and population files");
  add_common(gen);
  auto* smp = app.add_subcommand("sample", "draw one two-stage sample from a population file");
  add_common(smp);
  auto* est = app.add_subcommand("estimate", "estimate the population mean from one sample");
  add_common(est);
  est->add_option("--methods", methods, "method name")->required();
  est->add_option("--dump-draws", dump, "write posterior draws to this file");
  auto* sim = app.add_subcommand("simulate", "run the scenario grid");
  add_common(sim);
  sim->add_option("--methods", methods, "comma-separated methods");
  sim->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  auto* den = app.add_subcommand("density", "cluster size density table");
  add_common(den);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed"))
    opts.seed = seed;
  if (sub->get_option_no_throw("--methods") && sub->count("--methods") && sub != est)
    opts.methods = methods;
  if (sub->count("--out-dir"))
    opts.out_dir = out_dir;
  if (sub->get_option_no_throw("--workers") && sub->count("--workers"))
    opts.workers = workers;

  try {
    const RunConfig config = apply_overrides(load_config(config_path), opts);
    if (sub == gen)
      return cmd_generate(config, std::cerr);
    if (sub == smp)
      return cmd_sample(config, std::cerr);
    if (sub == est)
      return cmd_estimate(config, methods, std::cout, std::cerr,
                          est->count("--dump-draws") ? std::optional<std::string>(dump)
                                                     : std::nullopt);
    if (sub == sim)
      return cmd_simulate(config, std::cerr, cancel);
    return cmd_density(config, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const PopulationError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitIo;
  } catch (const DesignError& e) {
    std::cerr << "design error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStatistical;
  }
}

}  // namespace ppsb
