#pragma once

#include <cstdint>
#include <vector>

#include "mpe/mdp.hpp"
#include "mpe/rng.hpp"

namespace mpe {

/// One episode S_0 ~ p0, A_t ~ behavior_t(.|S_t), S_{t+1} ~ p(.|S_t, A_t).
/// The trajectory is a pure function of (mdp, behavior, seed).
Trajectory sample_episode(const MDP& mdp, const PolicyD& behavior, std::uint64_t seed);

/// Episode `index` of the stream `stream` under `master_seed`.
inline std::uint64_t episode_seed(std::uint64_t master_seed, std::uint64_t stream,
                                  std::uint64_t index) {
  return derive_seed(master_seed, {stream, index});
}

std::vector<Trajectory> sample_episodes(const MDP& mdp, const PolicyD& behavior, std::size_t count,
                                        std::uint64_t master_seed, std::uint64_t stream = 0);

}  // namespace mpe
