#include "mpe/harness/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <toml.hpp>

namespace mpe::harness {

namespace {

const std::vector<std::string> kTopKeys{"seed",        "strategies", "sample_grid", "runs",
                                        "groups",      "reference_n", "threads",   "write_reports",
                                        "out",         "ratio_clip",  "env",       "policies",
                                        "offline"};

void reject_unknown(const toml::table& table, const std::vector<std::string>& allowed,
                    const std::string& where) {
  for (const auto& [key, value] : table) {
    if (std::find(allowed.begin(), allowed.end(), key.str()) == allowed.end()) {
      throw ConfigError("unknown key '" + std::string(key.str()) + "' in " + where);
    }
  }
}

template <typename T>
T get_or(const toml::table& table, const char* key, T fallback) {
  const auto* node = table.get(key);
  if (!node) return fallback;
  if constexpr (std::is_same_v<T, bool>) {
    if (auto v = node->value<bool>()) return *v;
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (auto v = node->value<std::string>()) return *v;
  } else if constexpr (std::is_floating_point_v<T>) {
    if (auto v = node->value<double>()) return static_cast<T>(*v);
  } else {
    if (auto v = node->value<std::int64_t>()) {
      if (*v < 0) throw ConfigError(std::string(key) + " must be nonnegative");
      return static_cast<T>(*v);
    }
  }
  throw ConfigError(std::string("wrong type for ") + key);
}

const toml::table* subtable(const toml::table& root, const char* key) {
  const auto* node = root.get(key);
  if (!node) return nullptr;
  if (!node->is_table()) throw ConfigError(std::string(key) + " must be a table");
  return node->as_table();
}

void parse_env(const toml::table& t, EnvConfig& env) {
  reject_unknown(t, {"kind", "m", "slip", "reward_seed", "start_cell", "fixture"}, "[env]");
  const auto kind = get_or<std::string>(t, "kind", "gridworld");
  if (kind == "gridworld") {
    env.kind = EnvKind::gridworld;
  } else if (kind == "micro") {
    env.kind = EnvKind::micro;
  } else {
    throw ConfigError("env.kind must be gridworld or micro");
  }
  env.gridworld.m = get_or<Index>(t, "m", env.gridworld.m);
  env.gridworld.slip = get_or<double>(t, "slip", env.gridworld.slip);
  env.gridworld.reward_seed = get_or<std::uint64_t>(t, "reward_seed", env.gridworld.reward_seed);
  env.gridworld.start_cell = get_or<Index>(t, "start_cell", env.gridworld.start_cell);
  env.fixture = get_or<std::string>(t, "fixture", env.fixture);
}

void parse_policies(const toml::table& t, PolicySetSpec& p) {
  reject_unknown(t, {"K", "base", "epsilon", "logit_scale"}, "[policies]");
  p.K = get_or<std::size_t>(t, "K", p.K);
  p.epsilon = get_or<double>(t, "epsilon", p.epsilon);
  p.logit_scale = get_or<double>(t, "logit_scale", p.logit_scale);
  try {
    p.base = base_policy_from_string(get_or<std::string>(t, "base", to_string(p.base)));
  } catch (const InvalidInputError& e) {
    throw ConfigError(e.what());
  }
}

void parse_offline(const toml::table& t, OfflineConfig& o) {
  reject_unknown(t, {"episodes", "loggers", "exact"}, "[offline]");
  o.episodes = get_or<std::size_t>(t, "episodes", o.episodes);
  o.exact = get_or<bool>(t, "exact", o.exact);
  const auto loggers = get_or<std::string>(t, "loggers", to_string(o.loggers));
  if (loggers == "targets") {
    o.loggers = LoggerSet::targets;
  } else if (loggers == "uniform") {
    o.loggers = LoggerSet::uniform;
  } else if (loggers == "targets+uniform") {
    o.loggers = LoggerSet::targets_and_uniform;
  } else {
    throw ConfigError("offline.loggers must be targets, uniform or targets+uniform");
  }
}

}  // namespace

std::string to_string(LoggerSet l) {
  switch (l) {
    case LoggerSet::targets: return "targets";
    case LoggerSet::uniform: return "uniform";
    case LoggerSet::targets_and_uniform: return "targets+uniform";
  }
  return "?";
}

void ExperimentConfig::validate() const {
  if (strategies.empty()) throw ConfigError("strategies must not be empty");
  if (sample_grid.empty()) throw ConfigError("sample_grid must not be empty");
  for (std::size_t i = 0; i < sample_grid.size(); ++i) {
    if (sample_grid[i] == 0) throw ConfigError("sample_grid entries must be positive");
    if (i > 0 && sample_grid[i] <= sample_grid[i - 1]) {
      throw ConfigError("sample_grid must be strictly increasing");
    }
  }
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (groups < 1) throw ConfigError("groups must be >= 1");
  if (std::find(sample_grid.begin(), sample_grid.end(), reference_n) == sample_grid.end()) {
    throw ConfigError("reference_n must be one of the sample_grid values");
  }
  if (!offline.exact && offline.episodes == 0) throw ConfigError("offline.episodes must be positive");
  try {
    if (env.kind == EnvKind::gridworld) {
      env.gridworld.validate();
      policies.validate();
    } else {
      micro_fixture(env.fixture);
    }
    pdis.validate();
  } catch (const InvalidInputError& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig parse_config(const std::string& toml_text) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "TOML parse error: " << e.description() << " at line " << e.source().begin.line;
    throw ConfigError(msg.str());
  }
  reject_unknown(root, kTopKeys, "the top level");
  ExperimentConfig c;
  c.seed = get_or<std::uint64_t>(root, "seed", c.seed);
  c.runs = get_or<std::size_t>(root, "runs", c.runs);
  c.groups = get_or<std::size_t>(root, "groups", c.groups);
  c.reference_n = get_or<std::size_t>(root, "reference_n", c.reference_n);
  c.threads = get_or<unsigned>(root, "threads", c.threads);
  c.write_reports = get_or<bool>(root, "write_reports", c.write_reports);
  c.out_dir = get_or<std::string>(root, "out", c.out_dir.string());
  if (root.contains("ratio_clip")) c.pdis.ratio_clip = get_or<double>(root, "ratio_clip", 1.0);
  if (const auto* arr = root.get_as<toml::array>("strategies")) {
    c.strategies.clear();
    for (const auto& node : *arr) {
      const auto name = node.value<std::string>();
      if (!name) throw ConfigError("strategies must be strings");
      try {
        c.strategies.push_back(strategy_from_string(*name));
      } catch (const InvalidInputError& e) {
        throw ConfigError(e.what());
      }
    }
  } else if (root.contains("strategies")) {
    throw ConfigError("strategies must be an array");
  }
  if (const auto* arr = root.get_as<toml::array>("sample_grid")) {
    c.sample_grid.clear();
    for (const auto& node : *arr) {
      const auto n = node.value<std::int64_t>();
      if (!n || *n <= 0) throw ConfigError("sample_grid must hold positive integers");
      c.sample_grid.push_back(static_cast<std::size_t>(*n));
    }
  } else if (root.contains("sample_grid")) {
    throw ConfigError("sample_grid must be an array");
  }
  if (const auto* t = subtable(root, "env")) parse_env(*t, c.env);
  if (const auto* t = subtable(root, "policies")) parse_policies(*t, c.policies);
  if (const auto* t = subtable(root, "offline")) parse_offline(*t, c.offline);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

}  // namespace mpe::harness
