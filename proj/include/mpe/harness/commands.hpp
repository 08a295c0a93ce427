#pragma once

#include <filesystem>
#include <iosfwd>

#include "mpe/harness/config.hpp"
#include "mpe/harness/verify.hpp"

namespace mpe::harness {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitVerification = 3,
  kExitCoverage = 4,
};

/// Algorithm 1 on group 0 of the configured experiment: writes behavior.json,
/// similarity_report.json, targets.json, mdp.json, dataset.csv and dataset.json.
int cmd_synthesize(const ExperimentConfig& config, bool strict_coverage, std::ostream& out,
                   std::ostream& err);

int cmd_compare(const ExperimentConfig& config, std::ostream& out);

int cmd_verify(Suite suite, FormulaFault fault, const std::filesystem::path* out_dir,
               std::ostream& out);

int cmd_table(const std::filesystem::path& bundle_dir, std::ostream& out, std::ostream& err);

int cmd_gridworld_gen(const ExperimentConfig& config, std::ostream& out);

}  // namespace mpe::harness
