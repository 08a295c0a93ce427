#pragma once

#include "mpe/types.hpp"

namespace mpe {

/// Deliberate formula corruptions used by mutation tests of the verifier.
enum class FormulaFault {
  none,
  flip_r_hat_sign,  // r_hat = 2 r q + r^2
  drop_nu,          // next-state value variance omitted from q_hat / PDIS variance
};

struct DpOptions {
  /// Cross-check the Bellman-form q_hat against its defining variance form.
  bool verify_q_hat_identity = true;
  double identity_tolerance = 1e-9;
  FormulaFault fault = FormulaFault::none;
};

template <typename Scalar>
struct ActionValues {
  StateActionTable<Scalar> q;
  StateTable<Scalar> v;
  Scalar performance = 0;
};

/// Everything exact DP knows about one target policy.
template <typename Scalar>
struct ValueTables {
  StateActionTable<Scalar> q;
  StateTable<Scalar> v;
  StateActionTable<Scalar> nu;
  StateActionTable<Scalar> q_hat;
  StateActionTable<Scalar> r_hat;
  Scalar performance = 0;
};

/// Conditional variances V(G^PDIS | S_t = s) under a behavior policy and
/// under the target itself.
template <typename Scalar>
struct VarianceTables {
  StateTable<Scalar> pdis_var;
  StateTable<Scalar> onpolicy_var;
};

}  // namespace mpe
