#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpe/envs.hpp"
#include "mpe/estimators.hpp"

namespace mpe::harness {

/// Malformed or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EnvKind { gridworld, micro };

struct EnvConfig {
  EnvKind kind = EnvKind::gridworld;
  GridworldSpec gridworld;
  /// Micro-suite fixture name when kind == micro; its targets replace [policies].
  std::string fixture = "random_3x3";
};

enum class LoggerSet { targets, uniform, targets_and_uniform };

std::string to_string(LoggerSet l);

struct OfflineConfig {
  /// Total logged episodes, split evenly over the loggers.
  std::size_t episodes = 10000;
  LoggerSet loggers = LoggerSet::targets_and_uniform;
  /// Use the exact-weighted dataset instead of sampled episodes.
  bool exact = false;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::vector<Strategy> strategies{std::begin(kAllStrategies), std::end(kAllStrategies)};
  std::vector<std::size_t> sample_grid{100, 200, 500, 1000, 2000};
  std::size_t runs = 30;
  std::size_t groups = 30;
  std::size_t reference_n = 1000;
  EnvConfig env;
  PolicySetSpec policies;
  OfflineConfig offline;
  PdisConfig pdis;
  /// Worker threads for compare; 0 means hardware concurrency.
  unsigned threads = 0;
  /// Also write every EstimatorReport row (large).
  bool write_reports = false;
  std::filesystem::path out_dir = "out";

  /// Throws ConfigError on any violated invariant.
  void validate() const;
};

ExperimentConfig parse_config(const std::string& toml_text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace mpe::harness
