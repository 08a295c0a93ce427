#include "mpe/sampling.hpp"

namespace mpe {

Trajectory sample_episode(const MDP& mdp, const PolicyD& behavior, std::uint64_t seed) {
  if (!behavior.same_shape(mdp)) {
    throw DimensionError("behavior policy dimensions do not match the MDP");
  }
  SplitMix64 rng(seed);
  Trajectory traj;
  traj.steps.reserve(static_cast<std::size_t>(mdp.horizon()));

  Index state = sample_categorical(mdp.initial_dist(), rng);
  for (Index t = 0; t < mdp.horizon(); ++t) {
    const Index action = sample_categorical(behavior.at(t).row(state), rng);
    Step step;
    step.t = t;
    step.state = state;
    step.action = action;
    step.reward = mdp.reward(state, action);
    if (t + 1 < mdp.horizon()) {
      step.next_state = sample_categorical(mdp.transition_row(state, action), rng);
      state = step.next_state;
    }
    traj.steps.push_back(step);
  }
  return traj;
}

std::vector<Trajectory> sample_episodes(const MDP& mdp, const PolicyD& behavior, std::size_t count,
                                        std::uint64_t master_seed, std::uint64_t stream) {
  std::vector<Trajectory> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(sample_episode(mdp, behavior, episode_seed(master_seed, stream, i)));
  }
  return out;
}

}  // namespace mpe
