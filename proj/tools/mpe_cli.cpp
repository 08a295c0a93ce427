#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "mpe/harness/commands.hpp"

using namespace mpe;
using namespace mpe::harness;

int main(int argc, char** argv) {
  CLI::App app{"Multi-policy evaluation toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool strict = false;
  bool verbose = false;
  app.add_option("--config", config_path, "TOML experiment config");
  app.add_option("--seed", seed, "Master seed (overrides the config)");
  app.add_option("--out", out_dir, "Output directory (overrides the config)");
  app.add_flag("--strict-coverage", strict, "Treat offline coverage gaps as fatal");
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  auto* synthesize = app.add_subcommand("synthesize", "Offline data to the tailored behavior policy");
  auto* compare = app.add_subcommand("compare", "Run all estimators and write curves and tables");
  auto* verify = app.add_subcommand("verify", "Oracle, optimality and condition checks");
  std::string suite = "all";
  std::string fault = "none";
  verify->add_option("--suite", suite, "oracles | optimality | conditions | all")
      ->check(CLI::IsMember({"oracles", "optimality", "conditions", "all"}));
  verify->add_option("--inject-fault", fault)
      ->check(CLI::IsMember({"none", "r-hat-sign", "drop-nu"}))
      ->group("");
  auto* table = app.add_subcommand("table", "Render the tables of a compare bundle");
  std::string bundle_dir;
  table->add_option("bundle", bundle_dir, "Bundle directory (defaults to --out)");
  auto* gridworld = app.add_subcommand("gridworld-gen", "Write the configured gridworld as MDP JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    ExperimentConfig config = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (seed) config.seed = *seed;
    if (!out_dir.empty()) config.out_dir = out_dir;
    config.validate();

    if (*synthesize) return cmd_synthesize(config, strict, std::cout, std::cerr);
    if (*compare) return cmd_compare(config, std::cout);
    if (*verify) {
      const FormulaFault f = fault == "r-hat-sign" ? FormulaFault::flip_r_hat_sign
                             : fault == "drop-nu"  ? FormulaFault::drop_nu
                                                   : FormulaFault::none;
      const std::filesystem::path dir = config.out_dir;
      return cmd_verify(suite_from_string(suite), f, out_dir.empty() ? nullptr : &dir, std::cout);
    }
    if (*table) return cmd_table(bundle_dir.empty() ? config.out_dir : std::filesystem::path(bundle_dir), std::cout, std::cerr);
    if (*gridworld) return cmd_gridworld_gen(config, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CoverageError& e) {
    std::cerr << "coverage error: " << e.what() << "\n";
    return kExitCoverage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
