#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "mpe/mdp.hpp"
#include "mpe/value_tables.hpp"

namespace mpe {

/// Support predicates of a behavior policy relative to a target set, per
/// (t, s, a) and aggregated. A cell is covered when mu_t(a|s) > 0 or the
/// corresponding target quantity vanishes for every k:
///   Lambda_-   : pi
///   Lambda     : pi * q
///   Lambda_hat : pi * q_hat
struct CoverageReport {
  std::vector<BoolMatrix> in_lambda_minus;
  std::vector<BoolMatrix> in_lambda;
  std::vector<BoolMatrix> in_lambda_hat;
  bool lambda_minus = true;
  bool lambda = true;
  bool lambda_hat = true;
};

inline bool is_zero(double x) { return std::abs(x) <= kZeroThreshold; }

template <typename Scalar>
CoverageReport coverage_check(const Policy<Scalar>& behavior, const PolicySet<Scalar>& targets,
                              std::span<const ValueTables<Scalar>> tables) {
  if (tables.size() != targets.size()) {
    throw DimensionError("coverage_check needs one value table per target");
  }
  const Index T = behavior.horizon();
  const Index S = behavior.num_states();
  const Index A = behavior.num_actions();
  if (targets[0].horizon() != T || targets[0].num_states() != S || targets[0].num_actions() != A) {
    throw DimensionError("behavior and targets differ in shape");
  }
  CoverageReport report;
  for (Index t = 0; t < T; ++t) {
    BoolMatrix minus = BoolMatrix::Constant(S, A, true);
    BoolMatrix plain = minus;
    BoolMatrix hat = minus;
    const auto ti = static_cast<std::size_t>(t);
    for (Index s = 0; s < S; ++s) {
      for (Index a = 0; a < A; ++a) {
        if (!is_zero(static_cast<double>(behavior(t, s, a)))) continue;
        for (std::size_t k = 0; k < targets.size(); ++k) {
          const double pi = static_cast<double>(targets[k](t, s, a));
          if (!is_zero(pi)) minus(s, a) = false;
          if (!is_zero(pi * static_cast<double>(tables[k].q[ti](s, a)))) plain(s, a) = false;
          if (!is_zero(pi * static_cast<double>(tables[k].q_hat[ti](s, a)))) hat(s, a) = false;
        }
      }
    }
    report.lambda_minus = report.lambda_minus && minus.all();
    report.lambda = report.lambda && plain.all();
    report.lambda_hat = report.lambda_hat && hat.all();
    report.in_lambda_minus.push_back(std::move(minus));
    report.in_lambda.push_back(std::move(plain));
    report.in_lambda_hat.push_back(std::move(hat));
  }
  return report;
}

/// Classical coverage at a single (t, s): behavior positive wherever target is.
template <typename Scalar>
bool covers_at(const Policy<Scalar>& behavior, const Policy<Scalar>& target, Index t, Index s) {
  for (Index a = 0; a < behavior.num_actions(); ++a) {
    if (is_zero(static_cast<double>(behavior(t, s, a))) &&
        !is_zero(static_cast<double>(target(t, s, a)))) {
      return false;
    }
  }
  return true;
}

}  // namespace mpe
