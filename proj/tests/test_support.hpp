#pragma once

#include <cstdint>

#include "mpe/envs.hpp"
#include "mpe/mdp.hpp"

namespace mpe::testing {

/// Two-state, two-action MDP with hand-picked numbers.
inline MDP two_state_mdp(Index horizon = 2) {
  Matrix<double> p(4, 2);
  p << 0.7, 0.3,
       0.2, 0.8,
       0.5, 0.5,
       0.9, 0.1;
  Matrix<double> r(2, 2);
  r << 1.0, 0.0,
       0.5, 2.0;
  Vector<double> p0(2);
  p0 << 0.6, 0.4;
  return MDP(2, 2, horizon, p, r, p0);
}

/// Full-support behavior mixed from a target and a random policy, so the
/// pair is always covered.
inline PolicyD covering_behavior(const PolicyD& target, std::uint64_t seed) {
  const auto noise = random_policy(target.num_states(), target.num_actions(), target.horizon(), seed);
  StateActionTable<double> probs;
  for (Index t = 0; t < target.horizon(); ++t) probs.push_back(0.5 * target.at(t) + 0.5 * noise.at(t));
  return PolicyD(std::move(probs));
}

}  // namespace mpe::testing
