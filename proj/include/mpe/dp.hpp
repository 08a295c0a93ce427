#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include <spdlog/spdlog.h>

#include "mpe/coverage.hpp"
#include "mpe/mdp.hpp"
#include "mpe/value_tables.hpp"

// Exact finite-horizon dynamic programming: values, next-state value
// variance, the variance-augmented action value q_hat and exact PDIS
// variances. All recursions run backward in t and are O(T |S|^2 |A|).

namespace mpe {

namespace detail {

/// Variances that come out slightly negative through cancellation are
/// clamped to zero; anything beyond the tolerance (relative to the magnitude
/// of the cancelled terms) is a bug or a coverage violation.
template <typename Scalar>
Scalar clamp_variance(Scalar value, Scalar scale, const char* what) {
  if (value >= 0) return value;
  const Scalar tol = Scalar(kVarianceClampTolerance) * std::max<Scalar>(Scalar(1), std::abs(scale));
  if (value >= -tol) {
    spdlog::debug("clamped {} of {:.3e} to zero", what, static_cast<double>(value));
    return Scalar(0);
  }
  throw NumericalError(std::string("negative ") + what + " " +
                       detail::fmt_double(value) + " beyond tolerance");
}

template <typename Scalar>
Vector<Scalar> policy_average(const Matrix<Scalar>& pi, const Matrix<Scalar>& values) {
  return pi.cwiseProduct(values).rowwise().sum();
}

}  // namespace detail

template <typename Scalar>
ActionValues<Scalar> compute_q_v(const TabularMDP<Scalar>& mdp, const Policy<Scalar>& policy) {
  if (!policy.same_shape(mdp)) throw DimensionError("policy dimensions do not match the MDP");
  const Index T = mdp.horizon();
  ActionValues<Scalar> out;
  out.q = zero_table<Scalar>(T, mdp.num_states(), mdp.num_actions());
  out.v = zero_state_table<Scalar>(T, mdp.num_states());
  for (Index t = T - 1; t >= 0; --t) {
    const auto ti = static_cast<std::size_t>(t);
    out.q[ti] = mdp.reward();
    if (t + 1 < T) out.q[ti] += mdp.expect_next(out.v[ti + 1]);
    out.v[ti] = detail::policy_average(policy.at(t), out.q[ti]);
  }
  out.performance = mdp.initial_dist().dot(out.v[0]);
  return out;
}

/// nu_t(s, a) = Var_{S' ~ p(.|s,a)}[v_{t+1}(S')], zero at the last step.
template <typename Scalar>
StateActionTable<Scalar> compute_nu(const TabularMDP<Scalar>& mdp, const StateTable<Scalar>& v) {
  const Index T = mdp.horizon();
  auto nu = zero_table<Scalar>(T, mdp.num_states(), mdp.num_actions());
  for (Index t = 0; t + 1 < T; ++t) {
    const auto& next = v[static_cast<std::size_t>(t + 1)];
    const Matrix<Scalar> second = mdp.expect_next(next.cwiseProduct(next));
    const Matrix<Scalar> first = mdp.expect_next(next);
    auto& out = nu[static_cast<std::size_t>(t)];
    for (Index s = 0; s < mdp.num_states(); ++s) {
      for (Index a = 0; a < mdp.num_actions(); ++a) {
        out(s, a) = detail::clamp_variance<Scalar>(second(s, a) - first(s, a) * first(s, a),
                                                   second(s, a), "next-state value variance");
      }
    }
  }
  return nu;
}

/// r_hat_t(s, a) = 2 r(s, a) q_t(s, a) - r(s, a)^2.
template <typename Scalar>
StateActionTable<Scalar> compute_r_hat(const TabularMDP<Scalar>& mdp,
                                       const StateActionTable<Scalar>& q,
                                       FormulaFault fault = FormulaFault::none) {
  const auto& r = mdp.reward();
  const Scalar sign = fault == FormulaFault::flip_r_hat_sign ? Scalar(1) : Scalar(-1);
  StateActionTable<Scalar> r_hat;
  r_hat.reserve(q.size());
  for (const auto& qt : q) {
    r_hat.push_back(Scalar(2) * r.cwiseProduct(qt) + sign * r.cwiseProduct(r));
  }
  return r_hat;
}

/// Bellman form: q_hat_t = r_hat_t + sum_{s',a'} p(s'|s,a) pi_{t+1}(a'|s') q_hat_{t+1}(s',a').
template <typename Scalar>
StateActionTable<Scalar> compute_q_hat(const TabularMDP<Scalar>& mdp, const Policy<Scalar>& policy,
                                       const StateActionTable<Scalar>& r_hat) {
  const Index T = mdp.horizon();
  StateActionTable<Scalar> q_hat(static_cast<std::size_t>(T));
  for (Index t = T - 1; t >= 0; --t) {
    const auto ti = static_cast<std::size_t>(t);
    q_hat[ti] = r_hat[ti];
    if (t + 1 < T) {
      q_hat[ti] += mdp.expect_next(detail::policy_average(policy.at(t + 1), q_hat[ti + 1]));
    }
  }
  return q_hat;
}

/// Defining form: q_hat_t = q_t^2 + nu_t + sum_{s'} p(s'|s,a) Var_on_{t+1}(s').
template <typename Scalar>
StateActionTable<Scalar> compute_q_hat_defining(const TabularMDP<Scalar>& mdp,
                                                const StateActionTable<Scalar>& q,
                                                const StateActionTable<Scalar>& nu,
                                                const StateTable<Scalar>& onpolicy_var,
                                                FormulaFault fault = FormulaFault::none) {
  const Index T = mdp.horizon();
  StateActionTable<Scalar> q_hat(static_cast<std::size_t>(T));
  for (Index t = 0; t < T; ++t) {
    const auto ti = static_cast<std::size_t>(t);
    q_hat[ti] = q[ti].cwiseProduct(q[ti]);
    if (t + 1 < T) {
      if (fault != FormulaFault::drop_nu) q_hat[ti] += nu[ti];
      q_hat[ti] += mdp.expect_next(onpolicy_var[ti + 1]);
    }
  }
  return q_hat;
}

/// Closed form of the on-policy variance: Var_t(s) = sum_a pi q_hat - v^2.
template <typename Scalar>
StateTable<Scalar> compute_onpolicy_variance(const Policy<Scalar>& policy,
                                             const StateActionTable<Scalar>& q_hat,
                                             const StateTable<Scalar>& v) {
  StateTable<Scalar> out(q_hat.size());
  for (std::size_t t = 0; t < q_hat.size(); ++t) {
    const Vector<Scalar> second = detail::policy_average(policy.at(static_cast<Index>(t)), q_hat[t]);
    out[t].resize(second.size());
    for (Index s = 0; s < second.size(); ++s) {
      out[t](s) = detail::clamp_variance<Scalar>(second(s) - v[t](s) * v[t](s), second(s),
                                                 "on-policy variance");
    }
  }
  return out;
}

/// Exact V(G^PDIS_t | S_t = s) of `target` when actions come from `behavior`,
/// by the two-case backward recursion over t. Sums run over {a : mu(a|s) > 0}.
/// The caller guarantees coverage; see the checked overload below.
template <typename Scalar>
StateTable<Scalar> compute_pdis_variance(const TabularMDP<Scalar>& mdp,
                                         const Policy<Scalar>& target,
                                         const ActionValues<Scalar>& target_values,
                                         const StateActionTable<Scalar>& target_nu,
                                         const Policy<Scalar>& behavior,
                                         FormulaFault fault = FormulaFault::none) {
  if (!behavior.same_shape(mdp)) throw DimensionError("behavior dimensions do not match the MDP");
  const Index T = mdp.horizon();
  const Index S = mdp.num_states();
  const Index A = mdp.num_actions();
  auto var = zero_state_table<Scalar>(T, S);
  for (Index t = T - 1; t >= 0; --t) {
    const auto ti = static_cast<std::size_t>(t);
    const auto& q = target_values.q[ti];
    Matrix<Scalar> inner = q.cwiseProduct(q);
    if (t + 1 < T) {
      if (fault != FormulaFault::drop_nu) inner += target_nu[ti];
      inner += mdp.expect_next(var[ti + 1]);
    }
    for (Index s = 0; s < S; ++s) {
      Scalar second = 0;
      for (Index a = 0; a < A; ++a) {
        const Scalar mu = behavior(t, s, a);
        if (mu <= 0) continue;
        const Scalar pi = target(t, s, a);
        second += pi * pi / mu * inner(s, a);
      }
      const Scalar v = target_values.v[ti](s);
      var[ti](s) = detail::clamp_variance<Scalar>(second - v * v, second, "PDIS variance");
    }
  }
  return var;
}

template <typename Scalar>
ValueTables<Scalar> compute_value_tables(const TabularMDP<Scalar>& mdp,
                                         const Policy<Scalar>& policy,
                                         const DpOptions& options = {}) {
  auto qv = compute_q_v(mdp, policy);
  ValueTables<Scalar> out;
  out.nu = compute_nu(mdp, qv.v);
  out.r_hat = compute_r_hat(mdp, qv.q, options.fault);
  out.q_hat = compute_q_hat(mdp, policy, out.r_hat);

  for (std::size_t t = 0; t < out.q_hat.size(); ++t) {
    for (Index i = 0; i < out.q_hat[t].size(); ++i) {
      Scalar& x = out.q_hat[t].data()[i];
      x = detail::clamp_variance<Scalar>(x, qv.q[t].data()[i] * qv.q[t].data()[i], "q_hat");
    }
  }

  if (options.verify_q_hat_identity) {
    // On-policy variance through the PDIS recursion never touches q_hat, so
    // the defining form built from it is an independent route.
    const auto onpolicy = compute_pdis_variance(mdp, policy, qv, out.nu, policy, options.fault);
    const auto defining = compute_q_hat_defining(mdp, qv.q, out.nu, onpolicy, options.fault);
    for (std::size_t t = 0; t < defining.size(); ++t) {
      const Scalar scale = std::max<Scalar>(Scalar(1), out.q_hat[t].cwiseAbs().maxCoeff());
      const Scalar gap = (defining[t] - out.q_hat[t]).cwiseAbs().maxCoeff();
      if (gap > Scalar(options.identity_tolerance) * scale) {
        throw NumericalError("q_hat Bellman form disagrees with its defining form at t=" +
                             std::to_string(t) + " by " + detail::fmt_double(gap));
      }
    }
  }
  out.q = std::move(qv.q);
  out.v = std::move(qv.v);
  out.performance = qv.performance;
  return out;
}

template <typename Scalar>
ActionValues<Scalar> action_values(const ValueTables<Scalar>& tables) {
  return {tables.q, tables.v, tables.performance};
}

/// Coverage-checked PDIS variance: behavior must lie in Lambda_hat for target.
template <typename Scalar>
StateTable<Scalar> compute_pdis_variance(const TabularMDP<Scalar>& mdp,
                                         const Policy<Scalar>& target,
                                         const ValueTables<Scalar>& target_tables,
                                         const Policy<Scalar>& behavior,
                                         FormulaFault fault = FormulaFault::none) {
  const PolicySet<Scalar> single({target});
  const auto report =
      coverage_check(behavior, single, std::span<const ValueTables<Scalar>>(&target_tables, 1));
  if (!report.lambda_hat) {
    throw CoverageError("behavior policy leaves Lambda_hat for the target policy");
  }
  return compute_pdis_variance(mdp, target, action_values(target_tables), target_tables.nu,
                               behavior, fault);
}

template <typename Scalar>
StateTable<Scalar> compute_pdis_variance(const TabularMDP<Scalar>& mdp,
                                         const Policy<Scalar>& target,
                                         const Policy<Scalar>& behavior,
                                         const DpOptions& options = {}) {
  return compute_pdis_variance(mdp, target, compute_value_tables(mdp, target, options), behavior,
                               options.fault);
}

template <typename Scalar>
VarianceTables<Scalar> compute_variance_tables(const TabularMDP<Scalar>& mdp,
                                               const Policy<Scalar>& target,
                                               const ValueTables<Scalar>& target_tables,
                                               const Policy<Scalar>& behavior) {
  return {compute_pdis_variance(mdp, target, target_tables, behavior),
          compute_onpolicy_variance(target, target_tables.q_hat, target_tables.v)};
}

/// Unconditional variance of one episode's estimate: E_{S0}[Var | S0] + Var_{S0}(v_0).
template <typename Scalar>
Scalar total_variance(const TabularMDP<Scalar>& mdp, const Vector<Scalar>& conditional_var0,
                      const Vector<Scalar>& v0) {
  const auto& p0 = mdp.initial_dist();
  const Scalar mean = p0.dot(v0);
  return p0.dot(conditional_var0) + p0.dot(v0.cwiseProduct(v0)) - mean * mean;
}

}  // namespace mpe
