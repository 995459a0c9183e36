#include "ppsb/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ppsb {

namespace {

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value)
{
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ','))
    if (auto t = trim(item); !t.empty())
      out.push_back(t);
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value)
{
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("invalid value '" + value + "' for key '" + key + "'");
  return out;
}

double parse_positive(const std::string& key, const std::string& value)
{
  const double v = parse_number<double>(key, value);
  if (!(v > 0.0))
    throw ConfigError("key '" + key + "' must be positive");
  return v;
}

int parse_count(const std::string& key, const std::string& value, int min)
{
  const int v = parse_number<int>(key, value);
  if (v < min)
    throw ConfigError("key '" + key + "' must be at least " + std::to_string(min));
  return v;
}

bool parse_bool(const std::string& key, const std::string& value)
{
  if (value == "true" || value == "1" || value == "on")
    return true;
  if (value == "false" || value == "0" || value == "off")
    return false;
  throw ConfigError("key '" + key + "' expects true or false");
}

std::filesystem::path resolve_existing(const std::filesystem::path& base, const std::string& key,
                                       const std::string& value)
{
  std::filesystem::path p(value);
  if (p.is_relative())
    p = base / p;
  if (!std::filesystem::is_regular_file(p))
    throw IoError("file for '" + key + "' not found: " + p.string());
  return p;
}

const std::set<std::string> kFrames = {"poisson", "gamma_multinomial", "file", "ff"};

}  // namespace

WithinDesign parse_within(const std::string& label)
{
  try {
    if (label.rfind("frac", 0) == 0) {
      const double rho = parse_number<double>("design", label.substr(4));
      if (!(rho > 0.0 && rho <= 1.0))
        throw ConfigError("fraction must lie in (0, 1]");
      return FixedFraction{rho};
    }
    if (label.rfind("n", 0) == 0) {
      const auto n = parse_number<std::int64_t>("design", label.substr(1));
      if (n < 1)
        throw ConfigError("count must be positive");
      return FixedCount{n};
    }
  } catch (const ConfigError& e) {
    throw ConfigError("bad design '" + label + "': " + e.what());
  }
  throw ConfigError("bad design '" + label + "' (expected fracR or nK)");
}

RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir)
{
  RunConfig c;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  auto& sched = c.settings.schedule;

  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second)
      throw ConfigError("duplicate key '" + key + "'");
    if (value.empty())
      throw ConfigError("empty value for key '" + key + "'");

    if (key == "seed") {
      c.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "out_dir") {
      std::filesystem::path p(value);
      c.out_dir = p.is_relative() ? base_dir / p : p;
    } else if (key == "workers") {
      c.workers = static_cast<unsigned>(parse_count(key, value, 1));
    } else if (key == "frames") {
      c.frames = split_list(value);
      for (const auto& f : c.frames)
        if (!kFrames.count(f))
          throw ConfigError("unknown frame '" + f + "'");
    } else if (key == "clusters") {
      c.clusters = parse_count(key, value, 2);
    } else if (key == "poisson_rate") {
      c.poisson.rate = parse_positive(key, value);
    } else if (key == "gm_shape") {
      c.gamma_multinomial.shape = parse_positive(key, value);
    } else if (key == "gm_rate") {
      c.gamma_multinomial.rate = parse_positive(key, value);
    } else if (key == "gm_scale") {
      c.gamma_multinomial.scale = parse_positive(key, value);
    } else if (key == "gm_concentration") {
      c.gamma_multinomial.concentration = parse_positive(key, value);
    } else if (key == "frame_file") {
      c.frame_file = resolve_existing(base_dir, key, value);
    } else if (key == "frame_divisor") {
      c.frame_divisor = parse_positive(key, value);
    } else if (key == "ff_file") {
      c.ff_file = resolve_existing(base_dir, key, value);
    } else if (key == "outcomes") {
      c.outcomes.clear();
      for (const auto& o : split_list(value)) {
        try {
          c.outcomes.push_back(outcome_from_string(o));
        } catch (const std::exception&) {
          throw ConfigError("unknown outcome '" + o + "'");
        }
      }
    } else if (key == "js") {
      c.js.clear();
      for (const auto& v : split_list(value))
        c.js.push_back(static_cast<std::size_t>(parse_count(key, v, 1)));
    } else if (key == "designs") {
      c.designs = split_list(value);
      for (const auto& d : c.designs)
        parse_within(d);
    } else if (key == "replicates") {
      c.replicates = parse_count(key, value, 1);
    } else if (key == "methods") {
      try {
        c.methods = parse_methods(value);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "dgp_coef_sd") {
      c.hyper.coef_sd = parse_positive(key, value);
    } else if (key == "dgp_sigma_beta_scale") {
      c.hyper.sigma_beta_scale = parse_positive(key, value);
    } else if (key == "dgp_sigma_y_scale") {
      c.hyper.sigma_y_scale = parse_positive(key, value);
    } else if (key == "chains") {
      sched.chains = parse_count(key, value, 2);
    } else if (key == "warmup") {
      sched.warmup = parse_count(key, value, 1);
    } else if (key == "samples") {
      sched.samples = parse_count(key, value, 4);
    } else if (key == "escalate") {
      sched.escalate = parse_bool(key, value);
    } else if (key == "iteration_step") {
      sched.iteration_step = parse_count(key, value, 2);
    } else if (key == "max_iterations") {
      sched.max_iterations = parse_count(key, value, 2);
    } else if (key == "target_accept") {
      const double t = parse_number<double>(key, value);
      if (!(t > 0.0 && t < 1.0))
        throw ConfigError("target_accept must lie in (0, 1)");
      sched.hmc.target_accept = t;
    } else if (key == "plugin_approximation") {
      c.settings.prediction.plugin_approximation = parse_bool(key, value);
    } else if (key == "priors") {
      if (value == "default")
        c.settings.priors = PriorBlock{};
      else if (value == "simulation")
        c.settings.priors = PriorBlock::simulation_matched();
      else
        throw ConfigError("priors must be 'default' or 'simulation'");
    } else if (key == "population_file") {
      c.population_file = resolve_existing(base_dir, key, value);
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }

  for (const auto& f : c.frames) {
    if (f == "file" && c.frame_file.empty())
      throw ConfigError("frame 'file' needs frame_file");
    if (f == "ff" && c.ff_file.empty())
      throw ConfigError("frame 'ff' needs ff_file");
  }
  if (c.frames.empty() || c.outcomes.empty() || c.js.empty() || c.designs.empty())
    throw ConfigError("frames, outcomes, js and designs must be non-empty");
  if (sched.max_iterations < sched.warmup + sched.samples)
    sched.max_iterations = sched.warmup + sched.samples;
  return c;
}

RunConfig load_config(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open config file " + path.string());
  return parse_config(in, path.parent_path().empty() ? "." : path.parent_path());
}

SizeSource frame_source(const RunConfig& config, const std::string& frame)
{
  if (frame == "poisson")
    return config.poisson;
  if (frame == "gamma_multinomial")
    return config.gamma_multinomial;
  if (frame == "file")
    return FileSource{config.frame_file.string(), config.frame_divisor};
  throw ConfigError("frame '" + frame + "' has no generic size source");
}

std::vector<Scenario> build_grid(const RunConfig& config)
{
  if (!config.seed)
    throw ConfigError("a seed is required");
  const std::uint64_t pop_root = derive_seed(*config.seed, 1);
  const std::uint64_t rep_root = derive_seed(*config.seed, 2);
  const int js_max = static_cast<int>(*std::max_element(config.js.begin(), config.js.end()));

  std::vector<Scenario> out;
  std::uint64_t pop_index = 0;
  for (const auto& frame : config.frames) {
    for (OutcomeKind outcome : config.outcomes) {
      const std::uint64_t pop_seed = derive_seed(pop_root, pop_index++);
      if (frame == "ff") {
        Scenario s = fragile_families_scenario(config.ff_file.string(), outcome,
                                               config.replicates, *config.seed);
        s.population_seed = pop_seed;
        s.seed = derive_seed(rep_root, out.size());
        s.hyper = config.hyper;
        out.push_back(std::move(s));
        continue;
      }
      for (std::size_t js : config.js) {
        for (const auto& design : config.designs) {
          Scenario s;
          s.source = frame_source(config, frame);
          s.clusters = frame == "file" ? 0 : config.clusters;
          s.outcome = outcome;
          s.design = DesignSpec{js, parse_within(design)};
          s.js_max = js_max;
          s.replicates = config.replicates;
          s.hyper = config.hyper;
          s.population_seed = pop_seed;
          s.seed = derive_seed(rep_root, out.size());
          s.id = frame + "-" + to_string(outcome) + "-js" + std::to_string(js) + "-" +
                 s.design.label();
          out.push_back(std::move(s));
        }
      }
    }
  }
  return out;
}

}  // namespace ppsb
