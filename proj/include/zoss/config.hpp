#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "zoss/common.hpp"
#include "zoss/optimizer.hpp"

namespace zoss {

// ---------------------------------------------------------------------------
// Run/experiment configuration file: a sectioned key-value format.
//
//   [problem]
//   name = ABS
//   dim = 1
//
// Unknown sections or keys are rejected; values are scalars, booleans, or
// comma-separated lists. parse -> echo -> parse is lossless (comments are
// dropped by design; the canonical echo is what round-trips).
// ---------------------------------------------------------------------------

struct ConfigSection {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;

  const std::string* find(const std::string& key) const {
    for (const auto& [k, v] : entries)
      if (k == key) return &v;
    return nullptr;
  }
};

struct ConfigFile {
  std::vector<ConfigSection> sections;

  const ConfigSection* find(const std::string& name) const {
    for (const auto& s : sections)
      if (s.name == name) return &s;
    return nullptr;
  }

  std::string echo() const {
    std::string out;
    for (const auto& s : sections) {
      out += "[" + s.name + "]\n";
      for (const auto& [k, v] : s.entries) out += k + " = " + v + "\n";
    }
    return out;
  }

  bool operator==(const ConfigFile& other) const {
    if (sections.size() != other.sections.size()) return false;
    for (std::size_t i = 0; i < sections.size(); ++i) {
      if (sections[i].name != other.sections[i].name) return false;
      if (sections[i].entries != other.sections[i].entries) return false;
    }
    return true;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline const std::map<std::string, std::set<std::string>>& known_config_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"problem", {"name", "dim", "noise_sigma"}},
      {"constraint", {"kind", "lower", "upper", "center", "radius", "scale"}},
      {"schedule", {"a", "p", "b", "q", "offset"}},
      {"smoothing", {"lambda", "mc_samples"}},
      {"run",
       {"iterations", "seed", "stride", "probe_stride", "probe_mc_samples", "baseline",
        "use_post_update_y", "gap_tol", "record_residuals", "x0", "y0"}},
      {"experiment", {"seeds", "eps_gap", "lambdas", "reps", "points", "sigma"}},
  };
  return keys;
}

inline double parse_double(const std::string& section, const std::string& key,
                           const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config [" + section + "] " + key + ": not a number: '" + value + "'");
  }
}

inline long parse_long(const std::string& section, const std::string& key,
                       const std::string& value) {
  try {
    std::size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config [" + section + "] " + key + ": not an integer: '" + value + "'");
  }
}

inline bool parse_bool(const std::string& section, const std::string& key,
                       const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ConfigError("config [" + section + "] " + key + ": expected true or false, got '" + value +
                    "'");
}

inline std::vector<double> parse_list(const std::string& section, const std::string& key,
                                      const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(section, key, trim(item)));
  if (out.empty()) throw ConfigError("config [" + section + "] " + key + ": empty list");
  return out;
}

// Scalar values broadcast to the problem dimension.
inline Vec parse_vector(const std::string& section, const std::string& key,
                        const std::string& value, int dim) {
  std::vector<double> items = parse_list(section, key, value);
  if (items.size() == 1) return constant(static_cast<std::size_t>(dim), items[0]);
  if (static_cast<int>(items.size()) != dim)
    throw ConfigError("config [" + section + "] " + key + ": expected 1 or " +
                      std::to_string(dim) + " values");
  return items;
}

}  // namespace detail

inline ConfigFile parse_config_text(const std::string& text) {
  ConfigFile file;
  ConfigSection* current = nullptr;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  const auto& known = detail::known_config_keys();
  while (std::getline(ss, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": malformed section header");
      const std::string name = detail::trim(t.substr(1, t.size() - 2));
      if (known.find(name) == known.end())
        throw ConfigError("config line " + std::to_string(lineno) + ": unknown section [" + name +
                          "]");
      if (file.find(name) != nullptr)
        throw ConfigError("config line " + std::to_string(lineno) + ": duplicate section [" + name +
                          "]");
      file.sections.push_back(ConfigSection{name, {}});
      current = &file.sections.back();
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    if (current == nullptr)
      throw ConfigError("config line " + std::to_string(lineno) + ": key outside of any section");
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    const auto& section_keys = known.at(current->name);
    if (section_keys.find(key) == section_keys.end())
      throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key +
                        "' in section [" + current->name + "]");
    if (current->find(key) != nullptr)
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    if (value.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty value for '" + key +
                        "'");
    current->entries.emplace_back(key, value);
  }
  return file;
}

inline ConfigFile parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

// ---------------------------------------------------------------------------
// Typed view of the configuration.
// ---------------------------------------------------------------------------

struct ExperimentSettings {
  int seeds = 20;
  double eps_gap = 0.1;
  std::vector<double> lambdas = {0.4, 0.1, 0.05};
  int reps = 10000;
  int points = 10;
  double sigma = 0.1;
};

struct LoadedConfig {
  RunConfig run;
  ExperimentSettings experiment;
  ConfigFile raw;
};

inline LoadedConfig build_config(const ConfigFile& file) {
  LoadedConfig out;
  out.raw = file;
  RunConfig& rc = out.run;

  if (const ConfigSection* s = file.find("problem")) {
    if (const std::string* v = s->find("name")) rc.problem_name = *v;
    if (const std::string* v = s->find("dim"))
      rc.dim = static_cast<int>(detail::parse_long("problem", "dim", *v));
    if (const std::string* v = s->find("noise_sigma"))
      rc.noise_sigma = detail::parse_double("problem", "noise_sigma", *v);
  }
  // Resolve the problem now so constraint/x0 vectors know the dimension.
  ProblemCatalogEntry entry = make_catalog_entry(rc.problem_name, rc.dim, rc.noise_sigma);
  const int dim = entry.problem.dim;

  if (const ConfigSection* s = file.find("constraint")) {
    const std::string* kind = s->find("kind");
    if (!kind) throw ConfigError("config [constraint]: missing 'kind'");
    if (*kind == "box") {
      const std::string* lo = s->find("lower");
      const std::string* hi = s->find("upper");
      if (!lo || !hi) throw ConfigError("config [constraint]: box needs 'lower' and 'upper'");
      rc.constraint = ConstraintSet::box(detail::parse_vector("constraint", "lower", *lo, dim),
                                         detail::parse_vector("constraint", "upper", *hi, dim));
    } else if (*kind == "ball") {
      const std::string* center = s->find("center");
      const std::string* radius = s->find("radius");
      if (!radius) throw ConfigError("config [constraint]: ball needs 'radius'");
      Vec c = center ? detail::parse_vector("constraint", "center", *center, dim)
                     : zeros(static_cast<std::size_t>(dim));
      rc.constraint = ConstraintSet::ball(std::move(c),
                                          detail::parse_double("constraint", "radius", *radius));
    } else if (*kind == "simplex") {
      const std::string* scale = s->find("scale");
      if (!scale) throw ConfigError("config [constraint]: simplex needs 'scale'");
      rc.constraint =
          ConstraintSet::simplex(dim, detail::parse_double("constraint", "scale", *scale));
    } else {
      throw ConfigError("config [constraint]: unknown kind '" + *kind + "'");
    }
  }

  if (const ConfigSection* s = file.find("schedule")) {
    if (const std::string* v = s->find("a")) rc.schedule.a = detail::parse_double("schedule", "a", *v);
    if (const std::string* v = s->find("p")) rc.schedule.p = detail::parse_double("schedule", "p", *v);
    if (const std::string* v = s->find("b")) rc.schedule.b = detail::parse_double("schedule", "b", *v);
    if (const std::string* v = s->find("q")) rc.schedule.q = detail::parse_double("schedule", "q", *v);
    if (const std::string* v = s->find("offset"))
      rc.schedule.offset = detail::parse_long("schedule", "offset", *v);
  }

  if (const ConfigSection* s = file.find("smoothing")) {
    if (const std::string* v = s->find("lambda"))
      rc.lambda = detail::parse_double("smoothing", "lambda", *v);
    if (const std::string* v = s->find("mc_samples"))
      rc.probe_mc_samples = static_cast<int>(detail::parse_long("smoothing", "mc_samples", *v));
  }

  if (const ConfigSection* s = file.find("run")) {
    if (const std::string* v = s->find("iterations"))
      rc.iterations = detail::parse_long("run", "iterations", *v);
    if (const std::string* v = s->find("seed"))
      rc.seed = static_cast<std::uint64_t>(detail::parse_long("run", "seed", *v));
    if (const std::string* v = s->find("stride")) rc.stride = detail::parse_long("run", "stride", *v);
    if (const std::string* v = s->find("probe_stride"))
      rc.probe_stride = detail::parse_long("run", "probe_stride", *v);
    if (const std::string* v = s->find("probe_mc_samples"))
      rc.probe_mc_samples = static_cast<int>(detail::parse_long("run", "probe_mc_samples", *v));
    if (const std::string* v = s->find("baseline")) rc.baseline = detail::parse_bool("run", "baseline", *v);
    if (const std::string* v = s->find("use_post_update_y"))
      rc.use_post_update_y = detail::parse_bool("run", "use_post_update_y", *v);
    if (const std::string* v = s->find("gap_tol"))
      rc.gap_activity_tol = detail::parse_double("run", "gap_tol", *v);
    if (const std::string* v = s->find("record_residuals"))
      rc.record_residuals = detail::parse_bool("run", "record_residuals", *v);
    if (const std::string* v = s->find("x0")) rc.x0 = detail::parse_vector("run", "x0", *v, dim);
    if (const std::string* v = s->find("y0")) rc.y0 = detail::parse_vector("run", "y0", *v, dim);
  }

  ExperimentSettings& ex = out.experiment;
  if (const ConfigSection* s = file.find("experiment")) {
    if (const std::string* v = s->find("seeds"))
      ex.seeds = static_cast<int>(detail::parse_long("experiment", "seeds", *v));
    if (const std::string* v = s->find("eps_gap"))
      ex.eps_gap = detail::parse_double("experiment", "eps_gap", *v);
    if (const std::string* v = s->find("lambdas")) ex.lambdas = detail::parse_list("experiment", "lambdas", *v);
    if (const std::string* v = s->find("reps"))
      ex.reps = static_cast<int>(detail::parse_long("experiment", "reps", *v));
    if (const std::string* v = s->find("points"))
      ex.points = static_cast<int>(detail::parse_long("experiment", "points", *v));
    if (const std::string* v = s->find("sigma"))
      ex.sigma = detail::parse_double("experiment", "sigma", *v);
  }
  if (ex.seeds < 1) throw ConfigError("config [experiment] seeds: must be positive");
  return out;
}

inline LoadedConfig load_config(const std::string& path) {
  return build_config(parse_config_file(path));
}

}  // namespace zoss
