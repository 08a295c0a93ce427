#include "mpe/harness/experiment.hpp"

#include "mpe/rng.hpp"

namespace mpe::harness {

MDP build_environment(const ExperimentConfig& config) {
  if (config.env.kind == EnvKind::micro) return micro_fixture(config.env.fixture).mdp;
  return build_gridworld(config.env.gridworld);
}

PolicySetD build_targets(const ExperimentConfig& config, const MDP& mdp, std::size_t group) {
  if (config.env.kind == EnvKind::micro) return micro_fixture(config.env.fixture).targets;
  PolicySetSpec spec = config.policies;
  spec.seed = derive_seed(config.seed, {kPolicyPath, group});
  return build_policy_set(mdp, spec);
}

std::vector<PolicyD> build_loggers(const ExperimentConfig& config, const MDP& mdp,
                                   const PolicySetD& targets) {
  std::vector<PolicyD> loggers;
  if (config.offline.loggers != LoggerSet::uniform) {
    loggers.assign(targets.begin(), targets.end());
  }
  if (config.offline.loggers != LoggerSet::targets) {
    loggers.push_back(PolicyD::uniform(mdp.num_states(), mdp.num_actions(), mdp.horizon()));
  }
  return loggers;
}

GroupInstance build_group(const ExperimentConfig& config, std::size_t group) {
  MDP mdp = build_environment(config);
  PolicySetD targets = build_targets(config, mdp, group);
  const auto loggers = build_loggers(config, mdp, targets);
  OfflineDataset data =
      config.offline.exact
          ? exact_weighted_dataset(mdp, loggers)
          : generate_offline_data(mdp, loggers,
                                  std::max<std::size_t>(1, config.offline.episodes / loggers.size()),
                                  derive_seed(config.seed, {kOfflinePath, group}));
  MpeSynthesis synthesis = algorithm1_mpe(data, targets);
  std::vector<StateActionTable<double>> q_hat;
  for (const auto& tab : synthesis.tables) q_hat.push_back(tab.q_hat_est);
  auto odi = odi_behaviors(targets, q_hat);
  return {make_problem(std::move(mdp), std::move(targets)), std::move(data), std::move(synthesis),
          std::move(odi)};
}

}  // namespace mpe::harness
