#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "mpe/mdp.hpp"

namespace mpe {

struct EnumerationOptions {
  /// Upper bound on (|S| * |A|)^(steps enumerated).
  double cap = 1e6;
};

/// Where the enumerated segment starts. The defaults enumerate whole episodes
/// from p0; a fixed state conditions on S_t = state, and a fixed action
/// additionally conditions on A_t = action (its probability is taken as 1).
struct EnumerationStart {
  Index t = 0;
  Index state = kNoState;
  Index action = kNoState;
};

template <typename Scalar>
struct WeightedTrajectory {
  Trajectory trajectory;
  Scalar probability;
};

namespace detail {

template <typename Scalar, typename Visitor>
void enumerate_from(const TabularMDP<Scalar>& mdp, const Policy<Scalar>& behavior, Index t,
                    Index state, Index forced_action, Scalar mass, Trajectory& prefix,
                    Visitor& visit) {
  const Index horizon = mdp.horizon();
  for (Index a = 0; a < mdp.num_actions(); ++a) {
    if (forced_action != kNoState && a != forced_action) continue;
    const Scalar pa = forced_action != kNoState ? Scalar(1) : behavior(t, state, a);
    if (pa <= 0) continue;
    Step step{t, state, a, static_cast<double>(mdp.reward(state, a)), kNoState};
    if (t + 1 == horizon) {
      prefix.steps.push_back(step);
      visit(static_cast<const Trajectory&>(prefix), Scalar(mass * pa));
      prefix.steps.pop_back();
      continue;
    }
    for (Index next = 0; next < mdp.num_states(); ++next) {
      const Scalar p = mdp.transition(state, a, next);
      if (p <= 0) continue;
      step.next_state = next;
      prefix.steps.push_back(step);
      enumerate_from(mdp, behavior, t + 1, next, kNoState, Scalar(mass * pa * p), prefix, visit);
      prefix.steps.pop_back();
    }
  }
}

}  // namespace detail

/// Calls visit(trajectory, probability) once for every positive-probability
/// trajectory segment generated by `behavior`.
template <typename Scalar, typename Visitor>
void for_each_trajectory(const TabularMDP<Scalar>& mdp, const Policy<Scalar>& behavior,
                         Visitor&& visit, EnumerationStart start = {},
                         EnumerationOptions options = {}) {
  if (!behavior.same_shape(mdp)) throw DimensionError("behavior dimensions do not match the MDP");
  if (start.t < 0 || start.t >= mdp.horizon()) throw InvalidInputError("start time out of range");
  const double steps = static_cast<double>(mdp.horizon() - start.t);
  const double size = std::pow(static_cast<double>(mdp.num_states() * mdp.num_actions()), steps);
  if (size > options.cap) {
    throw EnumerationCapError("enumeration size " + std::to_string(size) + " exceeds cap " +
                              std::to_string(options.cap));
  }
  Trajectory prefix;
  prefix.steps.reserve(static_cast<std::size_t>(steps));
  if (start.state != kNoState) {
    detail::enumerate_from(mdp, behavior, start.t, start.state, start.action, Scalar(1), prefix,
                           visit);
    return;
  }
  for (Index s = 0; s < mdp.num_states(); ++s) {
    const Scalar p0 = mdp.initial_dist()(s);
    if (p0 <= 0) continue;
    detail::enumerate_from(mdp, behavior, start.t, s, start.action, p0, prefix, visit);
  }
}

template <typename Scalar>
std::vector<WeightedTrajectory<Scalar>> enumerate_trajectories(const TabularMDP<Scalar>& mdp,
                                                               const Policy<Scalar>& behavior,
                                                               EnumerationStart start = {},
                                                               EnumerationOptions options = {}) {
  std::vector<WeightedTrajectory<Scalar>> out;
  for_each_trajectory(
      mdp, behavior,
      [&out](const Trajectory& traj, Scalar probability) { out.push_back({traj, probability}); },
      start, options);
  return out;
}

}  // namespace mpe
