#pragma once

#include "mpe/enumerate.hpp"
#include "mpe/pdis.hpp"
#include "mpe/value_tables.hpp"

// Brute-force references computed by summing over every trajectory. They
// share no code with the dynamic programs they are used to check.

namespace mpe::oracle {

template <typename Scalar>
struct Moments {
  Scalar mean = 0;
  Scalar variance = 0;
};

/// Mean and variance of the PDIS return of `target` over the trajectory
/// segments generated by `behavior` from `start`.
template <typename Scalar>
Moments<Scalar> pdis_moments(const TabularMDP<Scalar>& mdp, const Policy<Scalar>& target,
                             const Policy<Scalar>& behavior, EnumerationStart start = {},
                             EnumerationOptions options = {}) {
  Scalar mass = 0, first = 0, second = 0;
  for_each_trajectory(
      mdp, behavior,
      [&](const Trajectory& traj, Scalar p) {
        const Scalar g = pdis_value(traj, target, behavior);
        mass += p;
        first += p * g;
        second += p * g * g;
      },
      start, options);
  return {first / mass, second / mass - (first / mass) * (first / mass)};
}

/// E[G_t | S_t = s] and V(G_t | S_t = s) for every (t, s), PDIS under behavior.
template <typename Scalar>
std::pair<StateTable<Scalar>, StateTable<Scalar>> pdis_tables(const TabularMDP<Scalar>& mdp,
                                                              const Policy<Scalar>& target,
                                                              const Policy<Scalar>& behavior,
                                                              EnumerationOptions options = {}) {
  auto mean = zero_state_table<Scalar>(mdp.horizon(), mdp.num_states());
  auto var = mean;
  for (Index t = 0; t < mdp.horizon(); ++t) {
    for (Index s = 0; s < mdp.num_states(); ++s) {
      const auto m = pdis_moments(mdp, target, behavior, {t, s, kNoState}, options);
      mean[static_cast<std::size_t>(t)](s) = m.mean;
      var[static_cast<std::size_t>(t)](s) = m.variance;
    }
  }
  return {mean, var};
}

/// q_t(s, a) = E[G_t | s, a] and q_hat_t(s, a) = E[G_t^2 | s, a] on-policy,
/// where G_t is the plain sum of rewards from t.
template <typename Scalar>
std::pair<StateActionTable<Scalar>, StateActionTable<Scalar>> return_moment_tables(
    const TabularMDP<Scalar>& mdp, const Policy<Scalar>& policy, EnumerationOptions options = {}) {
  auto q = zero_table<Scalar>(mdp.horizon(), mdp.num_states(), mdp.num_actions());
  auto q_hat = q;
  for (Index t = 0; t < mdp.horizon(); ++t) {
    for (Index s = 0; s < mdp.num_states(); ++s) {
      for (Index a = 0; a < mdp.num_actions(); ++a) {
        Scalar first = 0, second = 0;
        for_each_trajectory(
            mdp, policy,
            [&](const Trajectory& traj, Scalar p) {
              const Scalar g = traj.total_return();
              first += p * g;
              second += p * g * g;
            },
            EnumerationStart{t, s, a}, options);
        q[static_cast<std::size_t>(t)](s, a) = first;
        q_hat[static_cast<std::size_t>(t)](s, a) = second;
      }
    }
  }
  return {q, q_hat};
}

/// Var_{S' ~ p(.|s,a)}[v_{t+1}(S')] by listing successors one by one.
template <typename Scalar>
StateActionTable<Scalar> successor_value_variance(const TabularMDP<Scalar>& mdp,
                                                  const StateTable<Scalar>& v) {
  auto nu = zero_table<Scalar>(mdp.horizon(), mdp.num_states(), mdp.num_actions());
  for (Index t = 0; t + 1 < mdp.horizon(); ++t) {
    const auto& next = v[static_cast<std::size_t>(t + 1)];
    for (Index s = 0; s < mdp.num_states(); ++s) {
      for (Index a = 0; a < mdp.num_actions(); ++a) {
        Scalar mean = 0;
        for (Index sn = 0; sn < mdp.num_states(); ++sn) mean += mdp.transition(s, a, sn) * next(sn);
        Scalar var = 0;
        for (Index sn = 0; sn < mdp.num_states(); ++sn) {
          const Scalar d = next(sn) - mean;
          var += mdp.transition(s, a, sn) * d * d;
        }
        nu[static_cast<std::size_t>(t)](s, a) = var;
      }
    }
  }
  return nu;
}

}  // namespace mpe::oracle
