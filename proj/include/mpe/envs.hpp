#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mpe/mdp.hpp"

namespace mpe {

struct GridworldSpec {
  Index m = 5;
  /// Probability of the intended move; the rest is spread uniformly over all four moves.
  double slip = 0.9;
  std::uint64_t reward_seed = 0;
  /// Fixed start cell (row * m + col), or kNoState for a uniform start.
  Index start_cell = kNoState;

  void validate() const;
};

enum class GridAction : Index { up = 0, down = 1, left = 2, right = 3 };

/// |S| = m^2 cells indexed row * m + col, |A| = 4, T = m. Moves into a wall stay put.
MDP build_gridworld(const GridworldSpec& spec);

enum class BasePolicy { random_softmax, greedy_on_q };

std::string to_string(BasePolicy b);
BasePolicy base_policy_from_string(const std::string& name);

struct PolicySetSpec {
  std::size_t K = 10;
  BasePolicy base = BasePolicy::random_softmax;
  /// Weight of each policy's own random component: 0 gives K copies of the
  /// base, 1 gives K independent random policies.
  double epsilon = 0.1;
  std::uint64_t seed = 0;
  /// Standard deviation of the Gaussian logits behind every random softmax.
  double logit_scale = 1.5;

  void validate() const;
};

/// pi_k = (1 - epsilon) * base + epsilon * softmax(logit_scale * Z_k), Z_k standard normal.
PolicySetD build_policy_set(const MDP& mdp, const PolicySetSpec& spec);

struct MicroFixture {
  std::string name;
  MDP mdp;
  PolicySetD targets;
};

/// Small hand-built instances for enumeration oracles.
std::vector<MicroFixture> build_micro_suite();
MicroFixture micro_fixture(const std::string& name);

/// Dense random MDP: Dirichlet(1) transition rows and initial distribution,
/// rewards uniform on [reward_low, reward_high).
MDP random_tabular_mdp(Index num_states, Index num_actions, Index horizon, std::uint64_t seed,
                       double reward_low = 0.0, double reward_high = 1.0);

/// Dirichlet(1) action rows. With zero_fraction > 0 each entry is dropped
/// with that probability, keeping at least one action per row.
PolicyD random_policy(Index num_states, Index num_actions, Index horizon, std::uint64_t seed,
                      double zero_fraction = 0.0);

}  // namespace mpe
