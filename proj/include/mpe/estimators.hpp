#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpe/mdp.hpp"
#include "mpe/stats.hpp"
#include "mpe/synthesis.hpp"
#include "mpe/value_tables.hpp"

namespace mpe {

enum class Strategy { mpe, onpolicy, odi, son, sodi };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);
inline constexpr Strategy kAllStrategies[] = {Strategy::mpe, Strategy::onpolicy, Strategy::odi,
                                              Strategy::son, Strategy::sodi};

struct PdisConfig {
  /// Upper bound on each per-step ratio; off by default.
  std::optional<double> ratio_clip;

  void validate() const;
};

double pdis_return(const Trajectory& traj, const PolicyD& target, const PolicyD& behavior,
                   const PdisConfig& config = {});

/// An MDP, its targets, and their exact value tables (ground truth J_k = tables[k].performance).
struct EvaluationProblem {
  MDP mdp;
  PolicySetD targets;
  std::vector<ValueTables<double>> tables;

  double truth(std::size_t k) const { return tables[k].performance; }
  std::span<const ValueTables<double>> table_span() const { return tables; }
};

EvaluationProblem make_problem(MDP mdp, PolicySetD targets);

struct TargetEstimate {
  std::size_t k = 0;
  std::size_t n_used = 0;
  double estimate = 0.0;
  double ground_truth = 0.0;
  double abs_error = 0.0;
  /// abs_error / |ground_truth|, or abs_error when the truth is zero.
  double rel_error = 0.0;
  double emp_variance = 0.0;
  SampleStore samples;
};

struct EstimatorReport {
  Strategy strategy = Strategy::mpe;
  std::uint64_t seed = 0;
  /// Episodes generated in total, shared or not.
  std::size_t episodes = 0;
  std::vector<TargetEstimate> per_target;
};

/// n_k = n / K with the remainder going to the first targets.
std::vector<std::size_t> even_split(std::size_t n, std::size_t num_targets);

EstimatorReport run_mpe(const EvaluationProblem& problem, const PolicyD& behavior, std::size_t n,
                        std::uint64_t seed, const PdisConfig& config = {});
EstimatorReport run_onpolicy_mc(const EvaluationProblem& problem,
                                std::span<const std::size_t> split, std::uint64_t seed);
/// One tailored behavior per target, i.e. mu_hat built from that target alone.
std::vector<PolicyD> odi_behaviors(const PolicySetD& targets,
                                   std::span<const StateActionTable<double>> q_hat);
EstimatorReport run_odi(const EvaluationProblem& problem, std::span<const PolicyD> behaviors,
                        std::span<const std::size_t> split, std::uint64_t seed,
                        const PdisConfig& config = {});
EstimatorReport run_son(const EvaluationProblem& problem, std::span<const std::size_t> split,
                        std::uint64_t seed, const PdisConfig& config = {});
EstimatorReport run_sodi(const EvaluationProblem& problem, std::span<const PolicyD> behaviors,
                         std::span<const std::size_t> split, std::uint64_t seed,
                         const PdisConfig& config = {});

// Convenience forms that compute the ground truth themselves.
EstimatorReport run_mpe(const MDP& mdp, const PolicySetD& targets,
                        const BehaviorPolicy<double>& behavior, std::size_t n, std::uint64_t seed);
EstimatorReport run_onpolicy_mc(const MDP& mdp, const PolicySetD& targets,
                                std::span<const std::size_t> split, std::uint64_t seed);
EstimatorReport run_odi(const MDP& mdp, const PolicySetD& targets,
                        std::span<const StateActionTable<double>> q_hat,
                        std::span<const std::size_t> split, std::uint64_t seed);
EstimatorReport run_son(const MDP& mdp, const PolicySetD& targets,
                        std::span<const std::size_t> split, std::uint64_t seed);
EstimatorReport run_sodi(const MDP& mdp, const PolicySetD& targets,
                         std::span<const StateActionTable<double>> q_hat,
                         std::span<const std::size_t> split, std::uint64_t seed);

inline constexpr const char* kReportCsvHeader =
    "strategy,k,n_used,estimate,ground_truth,abs_error,rel_error,emp_variance,seed";

void write_report_csv(std::ostream& out, std::span<const EstimatorReport> reports,
                      bool header = true);

}  // namespace mpe
