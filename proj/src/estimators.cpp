#include "mpe/estimators.hpp"

#include <cmath>
#include <ostream>

#include "mpe/coverage.hpp"
#include "mpe/dp.hpp"
#include "mpe/pdis.hpp"
#include "mpe/sampling.hpp"

namespace mpe {

namespace {

// Episode streams. On-policy MC and SON draw the same episodes, as do ODI and
// SODI, so the pooled variants differ from their per-target versions only in
// how the data is weighted.
constexpr std::uint64_t kSharedStream = 0;
constexpr std::uint64_t kOnPolicyStream = 1ULL << 32;
constexpr std::uint64_t kTailoredStream = 2ULL << 32;

void require_split(const EvaluationProblem& problem, std::span<const std::size_t> split) {
  if (split.size() != problem.targets.size()) {
    throw DimensionError("sample split needs one count per target");
  }
}

void finish(EstimatorReport& report, const EvaluationProblem& problem) {
  for (auto& est : report.per_target) {
    const auto& m = est.samples.moments();
    est.n_used = m.count();
    est.estimate = m.mean();
    est.emp_variance = m.variance();
    est.ground_truth = problem.truth(est.k);
    est.abs_error = std::abs(est.estimate - est.ground_truth);
    est.rel_error = est.ground_truth != 0.0 ? est.abs_error / std::abs(est.ground_truth)
                                            : est.abs_error;
  }
}

EstimatorReport start_report(Strategy strategy, const EvaluationProblem& problem,
                             std::uint64_t seed) {
  EstimatorReport report;
  report.strategy = strategy;
  report.seed = seed;
  report.per_target.resize(problem.targets.size());
  for (std::size_t k = 0; k < report.per_target.size(); ++k) report.per_target[k].k = k;
  return report;
}

/// Hard error when reweighting `traj` from `behavior` to `target` could be
/// biased: some visited state has an action the target may take with
/// positive weight that the behavior never takes.
void check_visited_coverage(const Trajectory& traj, const PolicyD& behavior, const PolicyD& target,
                            const ValueTables<double>* tables) {
  for (const auto& step : traj.steps) {
    for (Index a = 0; a < behavior.num_actions(); ++a) {
      if (!is_zero(behavior(step.t, step.state, a))) continue;
      double weight = target(step.t, step.state, a);
      if (tables) weight *= tables->q_hat[static_cast<std::size_t>(step.t)](step.state, a);
      if (!is_zero(weight)) {
        throw CoverageError("pooled behavior does not cover a target at visited (t=" +
                            std::to_string(step.t) + ",s=" + std::to_string(step.state) +
                            ",a=" + std::to_string(a) + ")");
      }
    }
  }
}

/// Episodes generated by behaviors[j], n_j each, every one reweighted to every target.
EstimatorReport run_pooled(Strategy strategy, const EvaluationProblem& problem,
                           std::span<const PolicyD> behaviors, std::span<const std::size_t> split,
                           std::uint64_t seed, std::uint64_t stream, bool q_hat_coverage,
                           const PdisConfig& config) {
  require_split(problem, split);
  auto report = start_report(strategy, problem, seed);
  for (std::size_t j = 0; j < behaviors.size(); ++j) {
    for (std::size_t i = 0; i < split[j]; ++i) {
      const auto traj = sample_episode(problem.mdp, behaviors[j], episode_seed(seed, stream + j, i));
      ++report.episodes;
      for (std::size_t k = 0; k < problem.targets.size(); ++k) {
        if (k != j) {
          check_visited_coverage(traj, behaviors[j], problem.targets[k],
                                 q_hat_coverage ? &problem.tables[k] : nullptr);
        }
        report.per_target[k].samples.add(
            pdis_return(traj, problem.targets[k], behaviors[j], config));
      }
    }
  }
  finish(report, problem);
  return report;
}

}  // namespace

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::mpe: return "mpe";
    case Strategy::onpolicy: return "onpolicy";
    case Strategy::odi: return "odi";
    case Strategy::son: return "son";
    case Strategy::sodi: return "sodi";
  }
  return "unknown";
}

Strategy strategy_from_string(const std::string& name) {
  for (Strategy s : kAllStrategies) {
    if (to_string(s) == name) return s;
  }
  throw InvalidInputError("unknown strategy '" + name + "'");
}

void PdisConfig::validate() const {
  if (ratio_clip && !(*ratio_clip >= 1.0)) throw InvalidInputError("ratio_clip must be >= 1");
}

double pdis_return(const Trajectory& traj, const PolicyD& target, const PolicyD& behavior,
                   const PdisConfig& config) {
  config.validate();
  return pdis_value(traj, target, behavior, config.ratio_clip);
}

EvaluationProblem make_problem(MDP mdp, PolicySetD targets) {
  require_valid(mdp);
  for (const auto& pi : targets) require_valid(mdp, pi);
  EvaluationProblem problem{std::move(mdp), std::move(targets), {}};
  for (const auto& pi : problem.targets) {
    problem.tables.push_back(compute_value_tables(problem.mdp, pi));
  }
  return problem;
}

std::vector<std::size_t> even_split(std::size_t n, std::size_t num_targets) {
  if (num_targets == 0) throw InvalidInputError("need at least one target");
  std::vector<std::size_t> split(num_targets, n / num_targets);
  for (std::size_t k = 0; k < n % num_targets; ++k) ++split[k];
  return split;
}

EstimatorReport run_mpe(const EvaluationProblem& problem, const PolicyD& behavior, std::size_t n,
                        std::uint64_t seed, const PdisConfig& config) {
  const auto coverage = coverage_check(behavior, problem.targets, problem.table_span());
  if (!coverage.lambda_hat) throw CoverageError("behavior policy is outside Lambda_hat");
  auto report = start_report(Strategy::mpe, problem, seed);
  for (std::size_t i = 0; i < n; ++i) {
    const auto traj = sample_episode(problem.mdp, behavior, episode_seed(seed, kSharedStream, i));
    for (std::size_t k = 0; k < problem.targets.size(); ++k) {
      report.per_target[k].samples.add(pdis_return(traj, problem.targets[k], behavior, config));
    }
  }
  report.episodes = n;
  finish(report, problem);
  return report;
}

EstimatorReport run_onpolicy_mc(const EvaluationProblem& problem,
                                std::span<const std::size_t> split, std::uint64_t seed) {
  require_split(problem, split);
  auto report = start_report(Strategy::onpolicy, problem, seed);
  for (std::size_t k = 0; k < problem.targets.size(); ++k) {
    for (std::size_t i = 0; i < split[k]; ++i) {
      const auto traj =
          sample_episode(problem.mdp, problem.targets[k], episode_seed(seed, kOnPolicyStream + k, i));
      report.per_target[k].samples.add(traj.total_return());
      ++report.episodes;
    }
  }
  finish(report, problem);
  return report;
}

std::vector<PolicyD> odi_behaviors(const PolicySetD& targets,
                                   std::span<const StateActionTable<double>> q_hat) {
  if (q_hat.size() != targets.size()) throw DimensionError("need one q_hat table per target");
  std::vector<PolicyD> out;
  out.reserve(targets.size());
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const PolicySetD single({targets[k]});
    out.push_back(mu_hat_rl(single, q_hat.subspan(k, 1)).policy);
  }
  return out;
}

EstimatorReport run_odi(const EvaluationProblem& problem, std::span<const PolicyD> behaviors,
                        std::span<const std::size_t> split, std::uint64_t seed,
                        const PdisConfig& config) {
  require_split(problem, split);
  if (behaviors.size() != problem.targets.size()) {
    throw DimensionError("ODI needs one behavior per target");
  }
  auto report = start_report(Strategy::odi, problem, seed);
  for (std::size_t k = 0; k < problem.targets.size(); ++k) {
    const PolicySetD single({problem.targets[k]});
    const auto coverage =
        coverage_check(behaviors[k], single, problem.table_span().subspan(k, 1));
    if (!coverage.lambda_hat) throw CoverageError("ODI behavior is outside Lambda_hat");
    for (std::size_t i = 0; i < split[k]; ++i) {
      const auto traj =
          sample_episode(problem.mdp, behaviors[k], episode_seed(seed, kTailoredStream + k, i));
      report.per_target[k].samples.add(
          pdis_return(traj, problem.targets[k], behaviors[k], config));
      ++report.episodes;
    }
  }
  finish(report, problem);
  return report;
}

EstimatorReport run_son(const EvaluationProblem& problem, std::span<const std::size_t> split,
                        std::uint64_t seed, const PdisConfig& config) {
  return run_pooled(Strategy::son, problem, problem.targets.policies(), split, seed,
                    kOnPolicyStream, false, config);
}

EstimatorReport run_sodi(const EvaluationProblem& problem, std::span<const PolicyD> behaviors,
                         std::span<const std::size_t> split, std::uint64_t seed,
                         const PdisConfig& config) {
  if (behaviors.size() != problem.targets.size()) {
    throw DimensionError("SODI needs one behavior per target");
  }
  return run_pooled(Strategy::sodi, problem, behaviors, split, seed, kTailoredStream, true, config);
}

EstimatorReport run_mpe(const MDP& mdp, const PolicySetD& targets,
                        const BehaviorPolicy<double>& behavior, std::size_t n,
                        std::uint64_t seed) {
  return run_mpe(make_problem(mdp, targets), behavior.policy, n, seed);
}

EstimatorReport run_onpolicy_mc(const MDP& mdp, const PolicySetD& targets,
                                std::span<const std::size_t> split, std::uint64_t seed) {
  return run_onpolicy_mc(make_problem(mdp, targets), split, seed);
}

EstimatorReport run_odi(const MDP& mdp, const PolicySetD& targets,
                        std::span<const StateActionTable<double>> q_hat,
                        std::span<const std::size_t> split, std::uint64_t seed) {
  const auto behaviors = odi_behaviors(targets, q_hat);
  return run_odi(make_problem(mdp, targets), behaviors, split, seed);
}

EstimatorReport run_son(const MDP& mdp, const PolicySetD& targets,
                        std::span<const std::size_t> split, std::uint64_t seed) {
  return run_son(make_problem(mdp, targets), split, seed);
}

EstimatorReport run_sodi(const MDP& mdp, const PolicySetD& targets,
                         std::span<const StateActionTable<double>> q_hat,
                         std::span<const std::size_t> split, std::uint64_t seed) {
  const auto behaviors = odi_behaviors(targets, q_hat);
  return run_sodi(make_problem(mdp, targets), behaviors, split, seed);
}

void write_report_csv(std::ostream& out, std::span<const EstimatorReport> reports, bool header) {
  if (header) out << kReportCsvHeader << '\n';
  const auto old_precision = out.precision(17);
  for (const auto& report : reports) {
    for (const auto& est : report.per_target) {
      out << to_string(report.strategy) << ',' << est.k << ',' << est.n_used << ','
          << est.estimate << ',' << est.ground_truth << ',' << est.abs_error << ','
          << est.rel_error << ',' << est.emp_variance << ',' << report.seed << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace mpe
