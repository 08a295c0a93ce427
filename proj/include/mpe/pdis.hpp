#pragma once

#include <algorithm>
#include <optional>
#include <string>

#include "mpe/mdp.hpp"

namespace mpe {

/// Per-decision importance sampling return of a trajectory (or a suffix of
/// one), evaluated backward: G = rho_t (R_{t+1} + G_{t+1}), G past the end = 0.
/// A taken action with zero behavior probability cannot come from `behavior`
/// and is rejected.
template <typename Scalar>
Scalar pdis_value(const Trajectory& traj, const Policy<Scalar>& target,
                  const Policy<Scalar>& behavior, std::optional<double> ratio_clip = std::nullopt) {
  Scalar g = 0;
  for (auto it = traj.steps.rbegin(); it != traj.steps.rend(); ++it) {
    const Scalar mu = behavior(it->t, it->state, it->action);
    if (!(mu > 0)) {
      throw InvalidInputError("taken action has zero behavior probability at (t=" +
                              std::to_string(it->t) + ",s=" + std::to_string(it->state) +
                              ",a=" + std::to_string(it->action) + ")");
    }
    Scalar rho = target(it->t, it->state, it->action) / mu;
    if (ratio_clip) rho = std::min(rho, Scalar(*ratio_clip));
    g = rho * (Scalar(it->reward) + g);
  }
  return g;
}

}  // namespace mpe
