#include "mpe/envs.hpp"

#include <cmath>
#include <random>

#include "mpe/dp.hpp"
#include "mpe/rng.hpp"

namespace mpe {

namespace {

Eigen::RowVectorXd dirichlet_row(Index n, SplitMix64& rng) {
  Eigen::RowVectorXd row(n);
  for (Index i = 0; i < n; ++i) row(i) = -std::log1p(-rng.uniform());
  if (row.sum() <= 0) row.setOnes();
  return row / row.sum();
}

Eigen::RowVectorXd softmax(const Eigen::RowVectorXd& logits) {
  Eigen::RowVectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

Matrix<double> random_softmax_table(Index S, Index A, double scale, SplitMix64& rng) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix<double> out(S, A);
  for (Index s = 0; s < S; ++s) {
    Eigen::RowVectorXd logits(A);
    for (Index a = 0; a < A; ++a) logits(a) = normal(rng);
    out.row(s) = softmax(logits);
  }
  return out;
}

PolicyD greedy_on_uniform_q(const MDP& mdp) {
  const auto uniform = PolicyD::uniform(mdp.num_states(), mdp.num_actions(), mdp.horizon());
  const auto values = compute_q_v(mdp, uniform);
  auto probs = zero_table<double>(mdp.horizon(), mdp.num_states(), mdp.num_actions());
  for (std::size_t t = 0; t < probs.size(); ++t) {
    for (Index s = 0; s < mdp.num_states(); ++s) {
      Index best = 0;
      values.q[t].row(s).maxCoeff(&best);
      probs[t](s, best) = 1.0;
    }
  }
  return PolicyD(std::move(probs));
}

/// Builds an MDP from p[s][a] rows given as nested lists.
MDP from_rows(Index S, Index A, Index T, const std::vector<std::vector<std::vector<double>>>& p,
              const std::vector<std::vector<double>>& r, const std::vector<double>& p0) {
  Matrix<double> transition(S * A, S);
  Matrix<double> reward(S, A);
  Vector<double> initial(S);
  for (Index s = 0; s < S; ++s) {
    initial(s) = p0[static_cast<std::size_t>(s)];
    for (Index a = 0; a < A; ++a) {
      reward(s, a) = r[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
      for (Index n = 0; n < S; ++n) {
        transition(s * A + a, n) =
            p[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)][static_cast<std::size_t>(n)];
      }
    }
  }
  MDP mdp(S, A, T, std::move(transition), std::move(reward), std::move(initial));
  require_valid(mdp);
  return mdp;
}

/// Same action distribution at every (t, s).
PolicyD constant_policy(Index S, Index T, const std::vector<double>& row) {
  const auto A = static_cast<Index>(row.size());
  Matrix<double> m(S, A);
  for (Index s = 0; s < S; ++s) {
    for (Index a = 0; a < A; ++a) m(s, a) = row[static_cast<std::size_t>(a)];
  }
  return PolicyD(StateActionTable<double>(static_cast<std::size_t>(T), m));
}

MicroFixture deterministic_chain() {
  // Three states in a line; action 0 stays, action 1 steps right. Reward 1 everywhere.
  const Index S = 3, A = 2, T = 4;
  Matrix<double> transition = Matrix<double>::Zero(S * A, S);
  for (Index s = 0; s < S; ++s) {
    transition(s * A + 0, s) = 1.0;
    transition(s * A + 1, std::min<Index>(s + 1, S - 1)) = 1.0;
  }
  Vector<double> initial = Vector<double>::Zero(S);
  initial(0) = 1.0;
  MDP mdp(S, A, T, std::move(transition), Matrix<double>::Ones(S, A), std::move(initial));
  return {"deterministic_chain", mdp,
          PolicySetD({constant_policy(S, T, {1.0, 0.0}), constant_policy(S, T, {0.3, 0.7})})};
}

MicroFixture two_state_stochastic() {
  auto mdp = from_rows(2, 2, 3, {{{0.7, 0.3}, {0.2, 0.8}}, {{0.5, 0.5}, {0.9, 0.1}}},
                       {{1.0, 0.0}, {0.5, 2.0}}, {0.6, 0.4});
  return {"two_state_stochastic", mdp,
          PolicySetD({random_policy(2, 2, 3, 11), random_policy(2, 2, 3, 12)})};
}

MicroFixture disjoint_support() {
  auto mdp = from_rows(2, 2, 2, {{{0.5, 0.5}, {0.5, 0.5}}, {{1.0, 0.0}, {0.0, 1.0}}},
                       {{2.0, 2.0}, {1.0, 3.0}}, {1.0, 0.0});
  return {"disjoint_support", mdp,
          PolicySetD({constant_policy(2, 2, {1.0, 0.0}), constant_policy(2, 2, {0.0, 1.0})})};
}

MicroFixture identical_k3() {
  auto mdp = random_tabular_mdp(3, 3, 3, 31);
  const auto pi = random_policy(3, 3, 3, 32);
  return {"identical_k3", mdp, PolicySetD({pi, pi, pi})};
}

MicroFixture zero_reward() {
  auto mdp = from_rows(2, 2, 3, {{{0.4, 0.6}, {1.0, 0.0}}, {{0.3, 0.7}, {0.5, 0.5}}},
                       {{0.0, 0.0}, {0.0, 0.0}}, {0.5, 0.5});
  return {"zero_reward", mdp,
          PolicySetD({random_policy(2, 2, 3, 41), random_policy(2, 2, 3, 42)})};
}

MicroFixture near_singular() {
  // Tiny transition and action masses: ratios pi/mu and the variance terms
  // span many orders of magnitude.
  const double e = 1e-9;
  auto mdp = from_rows(2, 2, 3, {{{1.0 - e, e}, {e, 1.0 - e}}, {{0.5, 0.5}, {1.0 - e, e}}},
                       {{1.0, 0.0}, {10.0, 0.5}}, {1.0 - e, e});
  return {"near_singular", mdp,
          PolicySetD({constant_policy(2, 3, {1.0 - e, e}), constant_policy(2, 3, {e, 1.0 - e})})};
}

MicroFixture random_3x3() {
  return {"random_3x3", random_tabular_mdp(3, 3, 4, 51, -1.0, 1.0),
          PolicySetD({random_policy(3, 3, 4, 52), random_policy(3, 3, 4, 53, 0.3)})};
}

}  // namespace

void GridworldSpec::validate() const {
  if (m < 2) throw InvalidInputError("gridworld side m must be >= 2");
  if (!(slip >= 0.0 && slip <= 1.0)) throw InvalidInputError("slip must lie in [0, 1]");
  if (start_cell != kNoState && (start_cell < 0 || start_cell >= m * m)) {
    throw InvalidInputError("start cell out of range");
  }
}

MDP build_gridworld(const GridworldSpec& spec) {
  spec.validate();
  const Index m = spec.m;
  const Index S = m * m;
  const Index A = 4;
  auto move = [m](Index s, Index a) {
    Index row = s / m, col = s % m;
    switch (static_cast<GridAction>(a)) {
      case GridAction::up: row = std::max<Index>(row - 1, 0); break;
      case GridAction::down: row = std::min<Index>(row + 1, m - 1); break;
      case GridAction::left: col = std::max<Index>(col - 1, 0); break;
      case GridAction::right: col = std::min<Index>(col + 1, m - 1); break;
    }
    return row * m + col;
  };
  Matrix<double> transition = Matrix<double>::Zero(S * A, S);
  for (Index s = 0; s < S; ++s) {
    for (Index a = 0; a < A; ++a) {
      transition(s * A + a, move(s, a)) += spec.slip;
      for (Index b = 0; b < A; ++b) transition(s * A + a, move(s, b)) += (1.0 - spec.slip) / 4.0;
    }
  }
  SplitMix64 rng(spec.reward_seed);
  Matrix<double> reward(S, A);
  for (Index s = 0; s < S; ++s) {
    for (Index a = 0; a < A; ++a) reward(s, a) = rng.uniform();
  }
  Vector<double> initial;
  if (spec.start_cell == kNoState) {
    initial = Vector<double>::Constant(S, 1.0 / static_cast<double>(S));
  } else {
    initial = Vector<double>::Zero(S);
    initial(spec.start_cell) = 1.0;
  }
  return MDP(S, A, m, std::move(transition), std::move(reward), std::move(initial));
}

std::string to_string(BasePolicy b) {
  return b == BasePolicy::random_softmax ? "random_softmax" : "greedy_on_q";
}

BasePolicy base_policy_from_string(const std::string& name) {
  if (name == "random_softmax") return BasePolicy::random_softmax;
  if (name == "greedy_on_q") return BasePolicy::greedy_on_q;
  throw InvalidInputError("unknown base policy '" + name + "'");
}

void PolicySetSpec::validate() const {
  if (K < 1) throw InvalidInputError("policy set needs K >= 1");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidInputError("epsilon must lie in [0, 1]");
  if (!(logit_scale >= 0.0)) throw InvalidInputError("logit_scale must be nonnegative");
}

PolicySetD build_policy_set(const MDP& mdp, const PolicySetSpec& spec) {
  spec.validate();
  const Index S = mdp.num_states(), A = mdp.num_actions(), T = mdp.horizon();
  StateActionTable<double> base(static_cast<std::size_t>(T));
  if (spec.base == BasePolicy::greedy_on_q) {
    base = greedy_on_uniform_q(mdp).probs();
  } else {
    SplitMix64 rng(derive_seed(spec.seed, {0}));
    for (auto& m : base) m = random_softmax_table(S, A, spec.logit_scale, rng);
  }
  std::vector<PolicyD> policies;
  policies.reserve(spec.K);
  for (std::size_t k = 0; k < spec.K; ++k) {
    SplitMix64 rng(derive_seed(spec.seed, {1, k}));
    StateActionTable<double> probs(static_cast<std::size_t>(T));
    for (std::size_t t = 0; t < probs.size(); ++t) {
      probs[t] = (1.0 - spec.epsilon) * base[t] +
                 spec.epsilon * random_softmax_table(S, A, spec.logit_scale, rng);
      for (Index s = 0; s < S; ++s) probs[t].row(s) /= probs[t].row(s).sum();
    }
    policies.emplace_back(std::move(probs));
  }
  return PolicySetD(std::move(policies));
}

std::vector<MicroFixture> build_micro_suite() {
  return {deterministic_chain(), two_state_stochastic(), disjoint_support(),
          identical_k3(),        zero_reward(),          near_singular(),
          random_3x3()};
}

MicroFixture micro_fixture(const std::string& name) {
  for (auto& f : build_micro_suite()) {
    if (f.name == name) return f;
  }
  throw InvalidInputError("unknown micro fixture '" + name + "'");
}

MDP random_tabular_mdp(Index num_states, Index num_actions, Index horizon, std::uint64_t seed,
                       double reward_low, double reward_high) {
  SplitMix64 rng(seed);
  Matrix<double> transition(num_states * num_actions, num_states);
  for (Index i = 0; i < transition.rows(); ++i) transition.row(i) = dirichlet_row(num_states, rng);
  Matrix<double> reward(num_states, num_actions);
  for (Index s = 0; s < num_states; ++s) {
    for (Index a = 0; a < num_actions; ++a) {
      reward(s, a) = reward_low + (reward_high - reward_low) * rng.uniform();
    }
  }
  Vector<double> initial = dirichlet_row(num_states, rng).transpose();
  return MDP(num_states, num_actions, horizon, std::move(transition), std::move(reward),
             std::move(initial));
}

PolicyD random_policy(Index num_states, Index num_actions, Index horizon, std::uint64_t seed,
                      double zero_fraction) {
  SplitMix64 rng(seed);
  StateActionTable<double> probs(static_cast<std::size_t>(horizon));
  for (auto& m : probs) {
    m.resize(num_states, num_actions);
    for (Index s = 0; s < num_states; ++s) {
      Eigen::RowVectorXd row = dirichlet_row(num_actions, rng);
      if (zero_fraction > 0) {
        const Index keep = static_cast<Index>(rng.uniform() * static_cast<double>(num_actions));
        for (Index a = 0; a < num_actions; ++a) {
          if (a != keep && rng.uniform() < zero_fraction) row(a) = 0.0;
        }
        row /= row.sum();
      }
      m.row(s) = row;
    }
  }
  return PolicyD(std::move(probs));
}

}  // namespace mpe
