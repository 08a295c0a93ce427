#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "mpe/coverage.hpp"
#include "mpe/dp.hpp"
#include "mpe/mdp.hpp"

// Behavior policies tailored to a set of targets, and the similarity
// diagnostics that predict when they beat on-policy sampling.

namespace mpe {

/// Relative slack when comparing the two sides of a similarity condition.
inline constexpr double kConditionTolerance = 1e-12;

enum class Provenance { statistics_mu_star, rl_mu_hat, custom };

inline std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::statistics_mu_star: return "statistics_mu_star";
    case Provenance::rl_mu_hat: return "rl_mu_hat";
    case Provenance::custom: return "custom";
  }
  return "custom";
}

inline Provenance provenance_from_string(const std::string& name) {
  if (name == "statistics_mu_star") return Provenance::statistics_mu_star;
  if (name == "rl_mu_hat") return Provenance::rl_mu_hat;
  if (name == "custom") return Provenance::custom;
  throw InvalidInputError("unknown provenance '" + name + "'");
}

template <typename Scalar = double>
struct BehaviorPolicy {
  Policy<Scalar> policy;
  Provenance provenance = Provenance::custom;
};

/// Sample split {n_k}; only the fractions n_k / n matter. Empty means n_k = n / K.
struct SampleSplit {
  std::vector<double> counts;

  double fraction(std::size_t k, std::size_t num_targets) const {
    if (counts.empty()) return 1.0 / static_cast<double>(num_targets);
    if (counts.size() != num_targets) throw DimensionError("sample split needs one count per target");
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    if (total <= 0) throw InvalidInputError("sample split must have positive total");
    return counts[k] / total;
  }
};

namespace detail {

/// Normalizes nonnegative weights; an all-zero row becomes uniform.
template <typename Row>
void normalize_or_uniform(Row&& row) {
  using Scalar = typename std::decay_t<Row>::Scalar;
  const Scalar total = row.sum();
  if (total > 0) {
    row /= total;
  } else {
    row.setConstant(Scalar(1) / Scalar(row.size()));
  }
}

/// sqrt(eta_max / eta_min) * x, with the degenerate conventions: x = 0 gives
/// 0 whatever the ratio; eta_min = 0 otherwise gives +inf.
inline double scaled_by_ratio(double eta_min, double eta_max, double x) {
  if (x == 0.0) return 0.0;
  if (std::isnan(eta_min) || std::isnan(eta_max)) return x;
  if (eta_min <= 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(eta_max / eta_min) * x;
}

inline bool holds(double lhs, double rhs) {
  return lhs <= rhs + kConditionTolerance * std::max(1.0, std::abs(rhs));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Statistics (single-step) case.

template <typename Scalar = double>
struct BanditInstance {
  Index num_actions = 0;
  std::vector<Vector<Scalar>> targets;
  Vector<Scalar> payoff;

  void validate() const {
    if (targets.empty()) throw InvalidInputError("bandit needs K >= 1 targets");
    if (payoff.size() != num_actions) throw DimensionError("payoff must have |A| entries");
    for (const auto& pi : targets) {
      if (pi.size() != num_actions) throw DimensionError("target must have |A| entries");
      if ((pi.array() < 0).any() || std::abs(pi.sum() - Scalar(1)) > kProbabilityTolerance) {
        throw InvalidInputError("bandit target is not a distribution");
      }
    }
  }
};

/// mu*(a) proportional to sqrt(sum_k pi_k(a)^2 q(a)^2); uniform when all weights vanish.
template <typename Scalar>
Vector<Scalar> mu_star_bandit(const BanditInstance<Scalar>& instance) {
  instance.validate();
  Vector<Scalar> weights = Vector<Scalar>::Zero(instance.num_actions);
  for (const auto& pi : instance.targets) {
    weights += pi.cwiseProduct(instance.payoff).cwiseAbs2();
  }
  Vector<Scalar> mu = weights.cwiseSqrt();
  detail::normalize_or_uniform(mu);
  return mu;
}

/// Var_{A~mu}(rho(A) q(A)) for target pi, summing over mu > 0.
template <typename Scalar>
Scalar bandit_is_variance(const Vector<Scalar>& pi, const Vector<Scalar>& mu,
                          const Vector<Scalar>& q) {
  Scalar second = 0;
  Scalar first = 0;
  for (Index a = 0; a < q.size(); ++a) {
    if (mu(a) <= 0) continue;
    second += pi(a) * pi(a) / mu(a) * q(a) * q(a);
    first += pi(a) * q(a);
  }
  return second - first * first;
}

struct BanditSimilarityReport {
  std::vector<Eigen::VectorXd> eta;  // eta[k](a); NaN where w_bar(a) = 0
  double eta_min = std::numeric_limits<double>::quiet_NaN();
  double eta_max = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> delta;
  std::vector<bool> condition_lemma3;
  std::vector<bool> condition_lemma4;
  /// Exact variances of one weighted sample under mu* and one on-policy sample.
  std::vector<double> variance_mu_star;
  std::vector<double> variance_onpolicy;
};

template <typename Scalar>
BanditSimilarityReport similarity_report_bandit(const BanditInstance<Scalar>& instance,
                                                const SampleSplit& split = {}) {
  instance.validate();
  const std::size_t K = instance.targets.size();
  const Index A = instance.num_actions;
  const Eigen::VectorXd q = instance.payoff.template cast<double>();
  std::vector<Eigen::VectorXd> w(K);
  Eigen::VectorXd w_bar = Eigen::VectorXd::Zero(A);
  for (std::size_t k = 0; k < K; ++k) {
    w[k] = instance.targets[k].template cast<double>().cwiseProduct(q).cwiseAbs2();
    w_bar += w[k];
  }
  w_bar /= static_cast<double>(K);

  BanditSimilarityReport report;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t k = 0; k < K; ++k) {
    Eigen::VectorXd eta(A);
    for (Index a = 0; a < A; ++a) {
      if (is_zero(w_bar(a))) {
        eta(a) = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      eta(a) = w[k](a) / w_bar(a);
      lo = std::min(lo, eta(a));
      hi = std::max(hi, eta(a));
    }
    report.eta.push_back(std::move(eta));
  }
  if (std::isfinite(lo)) {
    report.eta_min = lo;
    report.eta_max = hi;
  }

  const Eigen::VectorXd mu = mu_star_bandit(instance).template cast<double>();
  for (std::size_t k = 0; k < K; ++k) {
    const Eigen::VectorXd pi = instance.targets[k].template cast<double>();
    const double mean = pi.dot(q);
    const double second = pi.dot(q.cwiseAbs2());
    const double abs_mean = pi.dot(q.cwiseAbs());
    const double delta = second - mean * mean;
    const double lhs4 = detail::scaled_by_ratio(report.eta_min, report.eta_max, abs_mean * abs_mean);
    const double frac = split.fraction(k, K);
    report.delta.push_back(delta);
    report.condition_lemma4.push_back(detail::holds(lhs4, second));
    report.condition_lemma3.push_back(detail::holds(lhs4 - (1.0 / frac - 1.0) * delta, second));
    report.variance_mu_star.push_back(bandit_is_variance<double>(pi, mu, q));
    report.variance_onpolicy.push_back(delta);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Reinforcement learning case.

namespace detail {

template <typename Scalar>
void require_q_hat_shapes(const PolicySet<Scalar>& targets,
                          std::span<const StateActionTable<Scalar>> q_hat) {
  if (q_hat.size() != targets.size()) throw DimensionError("need one q_hat table per target");
  for (const auto& table : q_hat) {
    if (static_cast<Index>(table.size()) != targets[0].horizon()) {
      throw DimensionError("q_hat horizon does not match the targets");
    }
    for (const auto& m : table) {
      if (m.rows() != targets[0].num_states() || m.cols() != targets[0].num_actions()) {
        throw DimensionError("q_hat table shape does not match the targets");
      }
    }
  }
}

template <typename Scalar>
Scalar checked_q_hat(Scalar x, Index t, Index s, Index a) {
  if (x >= 0) return x;
  if (x >= -Scalar(kVarianceClampTolerance)) return Scalar(0);
  throw InvalidInputError("negative q_hat " + fmt_double(x) + " at (t=" + std::to_string(t) +
                          ",s=" + std::to_string(s) + ",a=" + std::to_string(a) + ")");
}

}  // namespace detail

/// mu_hat_t(a|s) proportional to sqrt(sum_k pi_k,t(a|s)^2 q_hat_k,t(s,a)),
/// uniform over actions wherever every weight at (t, s) is zero.
template <typename Scalar>
BehaviorPolicy<Scalar> mu_hat_rl(const PolicySet<Scalar>& targets,
                                 std::span<const StateActionTable<Scalar>> q_hat) {
  detail::require_q_hat_shapes(targets, q_hat);
  const Index T = targets[0].horizon();
  const Index S = targets[0].num_states();
  const Index A = targets[0].num_actions();
  auto probs = zero_table<Scalar>(T, S, A);
  for (Index t = 0; t < T; ++t) {
    auto& mu = probs[static_cast<std::size_t>(t)];
    for (std::size_t k = 0; k < targets.size(); ++k) {
      const auto& pi = targets[k].at(t);
      const auto& qh = q_hat[k][static_cast<std::size_t>(t)];
      for (Index s = 0; s < S; ++s) {
        for (Index a = 0; a < A; ++a) {
          mu(s, a) += pi(s, a) * pi(s, a) * detail::checked_q_hat(qh(s, a), t, s, a);
        }
      }
    }
    mu = mu.cwiseSqrt();
    for (Index s = 0; s < S; ++s) detail::normalize_or_uniform(mu.row(s));
  }
  return {Policy<Scalar>(std::move(probs)), Provenance::rl_mu_hat};
}

template <typename Scalar>
BehaviorPolicy<Scalar> mu_hat_rl(const PolicySet<Scalar>& targets,
                                 std::span<const ValueTables<Scalar>> tables) {
  std::vector<StateActionTable<Scalar>> q_hat;
  q_hat.reserve(tables.size());
  for (const auto& tab : tables) q_hat.push_back(tab.q_hat);
  return mu_hat_rl(targets, std::span<const StateActionTable<Scalar>>(q_hat));
}

/// The per-(t, s) objective minimized by mu_hat: the summed conditional PDIS
/// variance when `mu_row` acts at t and each target acts afterwards,
///   sum_k [ sum_{a: mu>0} pi_k^2 / mu * q_hat_k - v_k^2 ].
/// Returns +inf when mu_row drops an action with pi_k * q_hat_k > 0.
template <typename Scalar, typename Row>
Scalar behavior_objective(const PolicySet<Scalar>& targets,
                          std::span<const ValueTables<Scalar>> tables, Index t, Index s,
                          const Row& mu_row) {
  const auto ti = static_cast<std::size_t>(t);
  Scalar total = 0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    Scalar second = 0;
    for (Index a = 0; a < mu_row.size(); ++a) {
      const Scalar pi = targets[k](t, s, a);
      const Scalar qh = tables[k].q_hat[ti](s, a);
      if (mu_row(a) <= 0) {
        if (!is_zero(static_cast<double>(pi * qh))) return std::numeric_limits<Scalar>::infinity();
        continue;
      }
      second += pi * pi / mu_row(a) * qh;
    }
    const Scalar v = tables[k].v[ti](s);
    total += second - v * v;
  }
  return total;
}

struct RlSimilarityReport {
  /// eta[k][t](s, a); NaN where w_bar_t(s, a) = 0.
  std::vector<std::vector<Eigen::MatrixXd>> eta;
  std::vector<double> eta_min;  // per t, NaN when every cell at t is excluded
  std::vector<double> eta_max;
  /// delta[k][t](s).
  std::vector<std::vector<Eigen::VectorXd>> delta;
  /// Sufficient inequalities evaluated at (k, t, s) alone.
  std::vector<std::vector<BoolVector>> condition_thm3_local;
  std::vector<std::vector<BoolVector>> condition_thm4_local;
  /// Local inequality at (k, t, s) and at every state reachable from it
  /// under (mu_hat, pi_k); this is what the inductive argument needs.
  std::vector<std::vector<BoolVector>> condition_thm3;
  std::vector<std::vector<BoolVector>> condition_thm4;
  std::vector<double> sample_fraction;  // n_k / n

  bool all_thm4() const {
    for (const auto& per_t : condition_thm4) {
      for (const auto& b : per_t) {
        if (!b.all()) return false;
      }
    }
    return true;
  }
};

namespace detail {

template <typename Scalar>
std::vector<BoolVector> certify(const TabularMDP<Scalar>& mdp, const Policy<Scalar>& target,
                                const Policy<Scalar>& behavior,
                                const std::vector<BoolVector>& local) {
  const Index T = mdp.horizon();
  std::vector<BoolVector> out(local);
  for (Index t = T - 2; t >= 0; --t) {
    const auto& next = out[static_cast<std::size_t>(t + 1)];
    auto& cur = out[static_cast<std::size_t>(t)];
    for (Index s = 0; s < mdp.num_states(); ++s) {
      if (!cur(s)) continue;
      for (Index a = 0; a < mdp.num_actions() && cur(s); ++a) {
        if (behavior(t, s, a) <= 0 || target(t, s, a) <= 0) continue;
        for (Index sn = 0; sn < mdp.num_states(); ++sn) {
          if (mdp.transition(s, a, sn) > 0 && !next(sn)) {
            cur(s) = false;
            break;
          }
        }
      }
    }
  }
  return out;
}

}  // namespace detail

template <typename Scalar>
RlSimilarityReport similarity_report_rl(const TabularMDP<Scalar>& mdp,
                                        const PolicySet<Scalar>& targets,
                                        std::span<const ValueTables<Scalar>> tables,
                                        const Policy<Scalar>& behavior,
                                        const SampleSplit& split = {}) {
  if (tables.size() != targets.size()) throw DimensionError("need one value table per target");
  if (!targets.same_shape(mdp) || !behavior.same_shape(mdp)) {
    throw DimensionError("policies do not match the MDP");
  }
  const std::size_t K = targets.size();
  const Index T = mdp.horizon();
  const Index S = mdp.num_states();
  const Index A = mdp.num_actions();
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();

  RlSimilarityReport report;
  report.eta.assign(K, std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(T)));
  report.delta.assign(K, std::vector<Eigen::VectorXd>(static_cast<std::size_t>(T)));
  report.condition_thm3_local.assign(K, std::vector<BoolVector>(static_cast<std::size_t>(T)));
  report.condition_thm4_local.assign(K, std::vector<BoolVector>(static_cast<std::size_t>(T)));
  for (std::size_t k = 0; k < K; ++k) report.sample_fraction.push_back(split.fraction(k, K));

  for (Index t = 0; t < T; ++t) {
    const auto ti = static_cast<std::size_t>(t);
    std::vector<Eigen::MatrixXd> w(K);
    Eigen::MatrixXd w_bar = Eigen::MatrixXd::Zero(S, A);
    for (std::size_t k = 0; k < K; ++k) {
      const Eigen::MatrixXd pi = targets[k].at(t).template cast<double>();
      w[k] = pi.cwiseAbs2().cwiseProduct(tables[k].q_hat[ti].template cast<double>());
      w_bar += w[k];
    }
    w_bar /= static_cast<double>(K);

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t k = 0; k < K; ++k) {
      Eigen::MatrixXd eta(S, A);
      for (Index s = 0; s < S; ++s) {
        for (Index a = 0; a < A; ++a) {
          if (is_zero(w_bar(s, a))) {
            eta(s, a) = nan;
            continue;
          }
          eta(s, a) = w[k](s, a) / w_bar(s, a);
          lo = std::min(lo, eta(s, a));
          hi = std::max(hi, eta(s, a));
        }
      }
      report.eta[k][ti] = std::move(eta);
    }
    report.eta_min.push_back(std::isfinite(lo) ? lo : nan);
    report.eta_max.push_back(std::isfinite(lo) ? hi : nan);

    for (std::size_t k = 0; k < K; ++k) {
      Eigen::VectorXd delta(S);
      BoolVector local3(S), local4(S);
      for (Index s = 0; s < S; ++s) {
        double root_sum = 0, rhs = 0;
        double weighted_nu = 0, second = 0, first = 0;
        for (Index a = 0; a < A; ++a) {
          const double pi = static_cast<double>(targets[k](t, s, a));
          const double qh = std::max(0.0, static_cast<double>(tables[k].q_hat[ti](s, a)));
          root_sum += pi * std::sqrt(qh);
          rhs += pi * qh;
          const double mu = static_cast<double>(behavior(t, s, a));
          if (mu <= 0) continue;
          const double q = static_cast<double>(tables[k].q[ti](s, a));
          weighted_nu += pi * pi / mu * static_cast<double>(tables[k].nu[ti](s, a));
          second += pi * pi / mu * q * q;
          first += pi * q;
        }
        delta(s) = weighted_nu + second - first * first;
        const double lhs =
            detail::scaled_by_ratio(report.eta_min.back(), report.eta_max.back(), root_sum * root_sum);
        local4(s) = detail::holds(lhs, rhs);
        local3(s) = detail::holds(lhs - (1.0 - report.sample_fraction[k]) * delta(s), rhs);
      }
      report.delta[k][ti] = std::move(delta);
      report.condition_thm3_local[k][ti] = std::move(local3);
      report.condition_thm4_local[k][ti] = std::move(local4);
    }
  }

  for (std::size_t k = 0; k < K; ++k) {
    report.condition_thm3.push_back(
        detail::certify(mdp, targets[k], behavior, report.condition_thm3_local[k]));
    report.condition_thm4.push_back(
        detail::certify(mdp, targets[k], behavior, report.condition_thm4_local[k]));
  }
  return report;
}

}  // namespace mpe
