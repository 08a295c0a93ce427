#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mpe/types.hpp"

namespace mpe {

/// Finite-horizon tabular MDP with deterministic rewards r(s, a).
///
/// Transitions are stored densely as an (|S|*|A|) x |S| matrix whose row
/// s*|A| + a holds p(. | s, a), so a Bellman backup over all (s, a) pairs is a
/// single matrix-vector product.
template <typename Scalar = double>
class TabularMDP {
 public:
  TabularMDP() = default;

  TabularMDP(Index num_states, Index num_actions, Index horizon, Matrix<Scalar> transition,
             Matrix<Scalar> reward, Vector<Scalar> initial_dist)
      : num_states_(num_states),
        num_actions_(num_actions),
        horizon_(horizon),
        transition_(std::move(transition)),
        reward_(std::move(reward)),
        initial_(std::move(initial_dist)) {
    if (num_states_ <= 0 || num_actions_ <= 0 || horizon_ <= 0) {
      throw DimensionError("num_states, num_actions and horizon must be positive");
    }
    if (transition_.rows() != num_states_ * num_actions_ || transition_.cols() != num_states_) {
      throw DimensionError("transition must be (|S|*|A|) x |S|");
    }
    if (reward_.rows() != num_states_ || reward_.cols() != num_actions_) {
      throw DimensionError("reward must be |S| x |A|");
    }
    if (initial_.size() != num_states_) throw DimensionError("initial_dist must have |S| entries");
  }

  Index num_states() const { return num_states_; }
  Index num_actions() const { return num_actions_; }
  Index horizon() const { return horizon_; }

  Index row(Index s, Index a) const { return s * num_actions_ + a; }

  const Matrix<Scalar>& transition() const { return transition_; }
  Scalar transition(Index s, Index a, Index next) const { return transition_(row(s, a), next); }
  auto transition_row(Index s, Index a) const { return transition_.row(row(s, a)); }

  const Matrix<Scalar>& reward() const { return reward_; }
  Scalar reward(Index s, Index a) const { return reward_(s, a); }

  const Vector<Scalar>& initial_dist() const { return initial_; }

  /// E_{s'~p(.|s,a)}[f(s')] for every (s, a), returned as an |S| x |A| matrix.
  Matrix<Scalar> expect_next(const Vector<Scalar>& f) const {
    const Vector<Scalar> flat = transition_ * f;
    return Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        flat.data(), num_states_, num_actions_);
  }

 private:
  Index num_states_ = 0;
  Index num_actions_ = 0;
  Index horizon_ = 0;
  Matrix<Scalar> transition_;
  Matrix<Scalar> reward_;
  Vector<Scalar> initial_;
};

/// Time-indexed stochastic policy pi_t(a | s).
template <typename Scalar = double>
class Policy {
 public:
  Policy() = default;

  explicit Policy(StateActionTable<Scalar> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw DimensionError("policy needs at least one time step");
    for (const auto& m : probs_) {
      if (m.rows() != probs_.front().rows() || m.cols() != probs_.front().cols() || m.size() == 0) {
        throw DimensionError("policy tables must share one non-empty |S| x |A| shape");
      }
    }
  }

  static Policy uniform(Index num_states, Index num_actions, Index horizon) {
    return Policy(StateActionTable<Scalar>(
        static_cast<std::size_t>(horizon),
        Matrix<Scalar>::Constant(num_states, num_actions, Scalar(1) / Scalar(num_actions))));
  }

  Index horizon() const { return static_cast<Index>(probs_.size()); }
  Index num_states() const { return probs_.empty() ? 0 : probs_.front().rows(); }
  Index num_actions() const { return probs_.empty() ? 0 : probs_.front().cols(); }

  const Matrix<Scalar>& at(Index t) const { return probs_[static_cast<std::size_t>(t)]; }
  Scalar operator()(Index t, Index s, Index a) const { return at(t)(s, a); }
  const StateActionTable<Scalar>& probs() const { return probs_; }

  template <typename Other>
  bool same_shape(const Other& mdp) const {
    return num_states() == mdp.num_states() && num_actions() == mdp.num_actions() &&
           horizon() == mdp.horizon();
  }

 private:
  StateActionTable<Scalar> probs_;
};

/// K >= 1 target policies sharing one MDP's dimensions.
template <typename Scalar = double>
class PolicySet {
 public:
  PolicySet() = default;

  explicit PolicySet(std::vector<Policy<Scalar>> policies) : policies_(std::move(policies)) {
    if (policies_.empty()) throw InvalidInputError("a policy set needs K >= 1 policies");
    for (const auto& p : policies_) {
      if (p.num_states() != policies_.front().num_states() ||
          p.num_actions() != policies_.front().num_actions() ||
          p.horizon() != policies_.front().horizon()) {
        throw DimensionError("policies in a set must share dimensions");
      }
    }
  }

  std::size_t size() const { return policies_.size(); }
  const Policy<Scalar>& operator[](std::size_t k) const { return policies_[k]; }
  auto begin() const { return policies_.begin(); }
  auto end() const { return policies_.end(); }
  const std::vector<Policy<Scalar>>& policies() const { return policies_; }

  template <typename Other>
  bool same_shape(const Other& mdp) const {
    return policies_.front().same_shape(mdp);
  }

 private:
  std::vector<Policy<Scalar>> policies_;
};

inline constexpr Index kNoState = -1;

struct Step {
  Index t = 0;
  Index state = 0;
  Index action = 0;
  double reward = 0.0;
  /// Successor state; kNoState after the final decision (episodes end with R_T).
  Index next_state = kNoState;
};

struct Trajectory {
  std::vector<Step> steps;

  double total_return() const {
    double g = 0.0;
    for (const auto& step : steps) g += step.reward;
    return g;
  }
  std::size_t size() const { return steps.size(); }
};

using MDP = TabularMDP<double>;
using PolicyD = Policy<double>;
using PolicySetD = PolicySet<double>;

namespace detail {

template <typename Scalar>
std::string fmt_double(Scalar x) {
  std::ostringstream os;
  os.precision(12);
  os << static_cast<double>(x);
  return os.str();
}

}  // namespace detail

/// Every violated invariant of the MDP, with indices. Empty means well formed.
template <typename Scalar>
std::vector<std::string> validate(const TabularMDP<Scalar>& mdp) {
  std::vector<std::string> errors;
  for (Index s = 0; s < mdp.num_states(); ++s) {
    for (Index a = 0; a < mdp.num_actions(); ++a) {
      const auto row = mdp.transition_row(s, a);
      const Scalar sum = row.sum();
      if (std::abs(sum - Scalar(1)) > kProbabilityTolerance) {
        errors.push_back("row sum " + detail::fmt_double(sum) + " at (s=" + std::to_string(s) +
                         ",a=" + std::to_string(a) + ")");
      }
      for (Index next = 0; next < mdp.num_states(); ++next) {
        if (row(next) < 0 || !std::isfinite(static_cast<double>(row(next)))) {
          errors.push_back("negative transition mass at (s=" + std::to_string(s) +
                           ",a=" + std::to_string(a) + ",s'=" + std::to_string(next) + ")");
        }
      }
      if (!std::isfinite(static_cast<double>(mdp.reward(s, a)))) {
        errors.push_back("non-finite reward at (s=" + std::to_string(s) + ",a=" +
                         std::to_string(a) + ")");
      }
    }
  }
  const Scalar p0_sum = mdp.initial_dist().sum();
  if (std::abs(p0_sum - Scalar(1)) > kProbabilityTolerance) {
    errors.push_back("initial mass sums to " + detail::fmt_double(p0_sum));
  }
  for (Index s = 0; s < mdp.num_states(); ++s) {
    if (mdp.initial_dist()(s) < 0) {
      errors.push_back("negative initial mass at s=" + std::to_string(s));
    }
  }
  return errors;
}

template <typename Scalar>
std::vector<std::string> validate(const Policy<Scalar>& policy) {
  std::vector<std::string> errors;
  for (Index t = 0; t < policy.horizon(); ++t) {
    for (Index s = 0; s < policy.num_states(); ++s) {
      const auto row = policy.at(t).row(s);
      if (std::abs(row.sum() - Scalar(1)) > kProbabilityTolerance) {
        errors.push_back("policy row sum " + detail::fmt_double(row.sum()) + " at (t=" +
                         std::to_string(t) + ",s=" + std::to_string(s) + ")");
      }
      if ((row.array() < 0).any()) {
        errors.push_back("negative action probability at (t=" + std::to_string(t) +
                         ",s=" + std::to_string(s) + ")");
      }
    }
  }
  return errors;
}

namespace detail {

inline std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += "; ";
    out += p;
  }
  return out;
}

}  // namespace detail

template <typename Scalar>
void require_valid(const TabularMDP<Scalar>& mdp) {
  if (auto errors = validate(mdp); !errors.empty()) {
    throw InvalidInputError("invalid MDP: " + detail::join(errors));
  }
}

template <typename Scalar>
void require_valid(const TabularMDP<Scalar>& mdp, const Policy<Scalar>& policy) {
  if (!policy.same_shape(mdp)) throw DimensionError("policy dimensions do not match the MDP");
  if (auto errors = validate(policy); !errors.empty()) {
    throw InvalidInputError("invalid policy: " + detail::join(errors));
  }
}

}  // namespace mpe
