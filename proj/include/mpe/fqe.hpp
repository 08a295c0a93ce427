#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mpe/mdp.hpp"
#include "mpe/synthesis.hpp"

// Tabular fitted Q-evaluation from logged (t, s, a, r, s') tuples and the
// offline construction of the tailored behavior policy built on it.

namespace mpe {

struct OfflineTuple {
  Index t = 0;
  Index s = 0;
  Index a = 0;
  double r = 0.0;
  /// kNoState for tuples from the final step.
  Index s_next = kNoState;
};

struct OfflineDataset {
  Index num_states = 0;
  Index num_actions = 0;
  Index horizon = 0;
  std::vector<OfflineTuple> tuples;
  /// Per-tuple weights; empty means every tuple has weight 1.
  std::vector<double> weights;
  std::string metadata;

  bool weighted() const { return !weights.empty(); }
  double weight(std::size_t i) const { return weights.empty() ? 1.0 : weights[i]; }
  void validate() const;
};

/// episodes_per_policy episodes from each logger, sliced into tuples.
OfflineDataset generate_offline_data(const MDP& mdp, std::span<const PolicyD> loggers,
                                     std::size_t episodes_per_policy, std::uint64_t seed);

/// Every (t, s, a, s') tuple reachable under the loggers, weighted by its exact
/// probability under an even mixture of them. Averages over this dataset are
/// exact expectations, which makes FQE reproduce dynamic programming.
OfflineDataset exact_weighted_dataset(const MDP& mdp, std::span<const PolicyD> loggers);

struct CellIndex {
  Index t = 0;
  Index s = 0;
  Index a = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

struct FqeTables {
  StateActionTable<double> q_est;
  StateActionTable<double> q_hat_est;
  /// Tuple count (or total weight) per cell.
  StateActionTable<double> visit_counts;
  /// Unvisited cells where the target puts positive probability.
  std::vector<CellIndex> coverage_gaps;
  /// Smallest q_hat estimate before clamping at zero.
  double min_unclamped_q_hat = 0.0;
};

/// Backward cell averages of r + sum_a' pi_{t+1}(a'|s') q_{t+1}(s', a'); unvisited cells are 0.
StateActionTable<double> fqe_q(const OfflineDataset& data, const PolicyD& target,
                               std::vector<CellIndex>* gaps = nullptr);

/// The same averaging applied to r_hat = 2 r q_est - r^2, clamped at zero.
StateActionTable<double> fqe_q_hat(const OfflineDataset& data, const PolicyD& target,
                                   const StateActionTable<double>& q_est,
                                   double* min_unclamped = nullptr);

FqeTables fqe_evaluate(const OfflineDataset& data, const PolicyD& target);

struct MpeSynthesis {
  BehaviorPolicy<double> behavior;
  std::vector<FqeTables> tables;
};

/// Offline data to mu_hat: FQE for q and q_hat of every target, then mu_hat_rl.
MpeSynthesis algorithm1_mpe(const OfflineDataset& data, const PolicySetD& targets);

inline constexpr const char* kDatasetCsvHeader = "t,s,a,r,s_next";

void write_dataset_csv(std::ostream& out, const OfflineDataset& data);
/// Dimensions come from the sidecar; the CSV holds tuples only.
OfflineDataset read_dataset_csv(std::istream& in, Index num_states, Index num_actions,
                                Index horizon);

}  // namespace mpe
