#pragma once

#include <cstddef>
#include <vector>

#include "mpe/estimators.hpp"
#include "mpe/fqe.hpp"
#include "mpe/harness/config.hpp"

namespace mpe::harness {

/// Seed-path roots so that every random draw of an experiment has its own stream.
enum SeedPath : std::uint64_t { kPolicyPath = 1, kOfflinePath = 2, kRunPath = 3 };

/// One independent draw of a target set together with everything learned
/// offline for it.
struct GroupInstance {
  EvaluationProblem problem;
  OfflineDataset data;
  MpeSynthesis synthesis;
  /// Single-target tailored behaviors built from the same FQE tables.
  std::vector<PolicyD> odi;
};

MDP build_environment(const ExperimentConfig& config);
PolicySetD build_targets(const ExperimentConfig& config, const MDP& mdp, std::size_t group);
std::vector<PolicyD> build_loggers(const ExperimentConfig& config, const MDP& mdp,
                                   const PolicySetD& targets);
GroupInstance build_group(const ExperimentConfig& config, std::size_t group);

}  // namespace mpe::harness
