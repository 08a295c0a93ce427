#include <gtest/gtest.h>

#include "mpe/dp.hpp"
#include "mpe/oracle.hpp"
#include "test_support.hpp"

namespace mpe {
namespace {

constexpr double kTol = 1e-10;

MDP deterministic_cycle(Index horizon) {
  // Action 0 stays, action 1 moves to the other state.
  Matrix<double> p(4, 2);
  p << 1, 0,
       0, 1,
       0, 1,
       1, 0;
  Matrix<double> r(2, 2);
  r << 1.0, -2.0,
       3.0, 0.5;
  Vector<double> p0(2);
  p0 << 1.0, 0.0;
  return MDP(2, 2, horizon, p, r, p0);
}

PolicyD deterministic_policy(Index S, Index A, Index T, Index action) {
  Matrix<double> m = Matrix<double>::Zero(S, A);
  m.col(action).setOnes();
  return PolicyD(StateActionTable<double>(static_cast<std::size_t>(T), m));
}

TEST(ComputeQV, OneStepActionValuesAreRewards) {
  const auto mdp = testing::two_state_mdp(1);
  const auto qv = compute_q_v(mdp, PolicyD::uniform(2, 2, 1));
  EXPECT_EQ(qv.q[0], mdp.reward());
}

TEST(ComputeQV, UnitRewardChainHasPerformanceEqualToHorizon) {
  const MDP mdp(1, 1, 4, Matrix<double>::Ones(1, 1), Matrix<double>::Ones(1, 1),
                Vector<double>::Ones(1));
  EXPECT_DOUBLE_EQ(compute_q_v(mdp, PolicyD::uniform(1, 1, 4)).performance, 4.0);
}

TEST(ComputeQV, ValuesAreConsistentAndMatchEnumeration) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto mdp = random_tabular_mdp(3, 2, 4, seed, -1.0, 1.0);
    const auto pi = random_policy(3, 2, 4, 50 + seed);
    const auto qv = compute_q_v(mdp, pi);
    const auto [q_enum, q_hat_enum] = oracle::return_moment_tables(mdp, pi);
    EXPECT_LT(max_abs_difference(qv.q, q_enum), kTol);
    for (Index t = 0; t < 4; ++t) {
      const Eigen::VectorXd v = pi.at(t).cwiseProduct(qv.q[t]).rowwise().sum();
      EXPECT_LT((v - qv.v[t]).cwiseAbs().maxCoeff(), kTol);
    }
    EXPECT_NEAR(qv.performance, oracle::pdis_moments(mdp, pi, pi).mean, kTol);
  }
}

TEST(ComputeNu, DeterministicTransitionsHaveNoSuccessorVariance) {
  const auto mdp = deterministic_cycle(4);
  const auto qv = compute_q_v(mdp, PolicyD::uniform(2, 2, 4));
  for (const auto& m : compute_nu(mdp, qv.v)) EXPECT_EQ(m.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ComputeNu, FairCoinBetweenZeroAndTwoHasUnitVariance) {
  Matrix<double> p(2, 2);
  p << 0.5, 0.5,
       0.5, 0.5;
  const MDP mdp(2, 1, 2, p, Matrix<double>::Zero(2, 1), Vector<double>::Constant(2, 0.5));
  StateTable<double> v(2, Vector<double>::Zero(2));
  v[1] << 0.0, 2.0;
  const auto nu = compute_nu(mdp, v);
  EXPECT_DOUBLE_EQ(nu[0](0, 0), 1.0);
  EXPECT_DOUBLE_EQ(nu[1](0, 0), 0.0);
}

TEST(ComputeNu, MatchesSuccessorEnumeration) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto mdp = random_tabular_mdp(3, 3, 4, 10 + seed, -1.0, 1.0);
    const auto qv = compute_q_v(mdp, random_policy(3, 3, 4, seed));
    EXPECT_LT(max_abs_difference(compute_nu(mdp, qv.v), oracle::successor_value_variance(mdp, qv.v)),
              kTol);
  }
}

TEST(ComputeRHat, ElementwiseFormula) {
  Matrix<double> r(1, 3);
  r << 3.0, 0.0, 2.0;
  const MDP mdp(1, 3, 1, Matrix<double>::Ones(3, 1), r, Vector<double>::Ones(1));
  StateActionTable<double> q(1, Matrix<double>(1, 3));
  q[0] << 3.0, 7.0, 5.0;
  const auto r_hat = compute_r_hat(mdp, q);
  EXPECT_DOUBLE_EQ(r_hat[0](0, 0), 9.0);
  EXPECT_DOUBLE_EQ(r_hat[0](0, 1), 0.0);
  EXPECT_DOUBLE_EQ(r_hat[0](0, 2), 16.0);
  EXPECT_DOUBLE_EQ(compute_r_hat(mdp, q, FormulaFault::flip_r_hat_sign)[0](0, 2), 24.0);
}

TEST(ComputeQHat, FinalStepIsSquaredReward) {
  const auto mdp = random_tabular_mdp(3, 2, 3, 4, -1.0, 1.0);
  const auto tables = compute_value_tables(mdp, random_policy(3, 2, 3, 5));
  EXPECT_EQ(tables.q_hat[2], mdp.reward().cwiseAbs2());
  EXPECT_EQ(tables.nu[2].cwiseAbs().maxCoeff(), 0.0);
}

TEST(ComputeQHat, DeterministicSystemGivesSquaredActionValues) {
  const auto mdp = deterministic_cycle(5);
  const auto tables = compute_value_tables(mdp, deterministic_policy(2, 2, 5, 1));
  for (std::size_t t = 0; t < 5; ++t) {
    EXPECT_LT((tables.q_hat[t] - tables.q[t].cwiseAbs2()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ComputeQHat, EqualsSecondMomentOfReturn) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto mdp = random_tabular_mdp(3, 2, 4, 300 + seed, -1.0, 1.0);
    const auto pi = random_policy(3, 2, 4, 400 + seed, 0.3);
    const auto tables = compute_value_tables(mdp, pi);
    const auto [q_enum, q_hat_enum] = oracle::return_moment_tables(mdp, pi);
    EXPECT_LT(max_abs_difference(tables.q_hat, q_hat_enum), kTol);
  }
}

TEST(ComputeQHat, BellmanAndDefiningFormsAgree) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto mdp = random_tabular_mdp(4, 3, 5, 500 + seed, -2.0, 2.0);
    const auto pi = random_policy(4, 3, 5, 600 + seed, 0.2);
    DpOptions options;
    options.verify_q_hat_identity = false;
    const auto tables = compute_value_tables(mdp, pi, options);
    const auto onpolicy = compute_onpolicy_variance(pi, tables.q_hat, tables.v);
    const auto defining = compute_q_hat_defining(mdp, tables.q, tables.nu, onpolicy);
    EXPECT_LT(max_abs_difference(tables.q_hat, defining), 1e-9);
  }
}

TEST(ComputeQHat, InjectedFaultsBreakTheIdentity) {
  const auto mdp = random_tabular_mdp(3, 2, 4, 7, 0.1, 1.0);
  const auto pi = random_policy(3, 2, 4, 8);
  EXPECT_NO_THROW(compute_value_tables(mdp, pi));
  DpOptions flip;
  flip.fault = FormulaFault::flip_r_hat_sign;
  EXPECT_THROW(compute_value_tables(mdp, pi, flip), NumericalError);
}

TEST(PdisVariance, OnPolicyEqualsClosedForm) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto mdp = random_tabular_mdp(3, 3, 4, 700 + seed, -1.0, 1.0);
    const auto pi = random_policy(3, 3, 4, 800 + seed, 0.3);
    const auto tables = compute_value_tables(mdp, pi);
    const auto pdis = compute_pdis_variance(mdp, pi, tables, pi);
    const auto closed = compute_onpolicy_variance(pi, tables.q_hat, tables.v);
    EXPECT_LT(max_abs_difference(pdis, closed), 1e-12);
  }
}

TEST(PdisVariance, SingleStepMatchesBanditAlgebra) {
  Matrix<double> r(1, 3);
  r << 1.0, -2.0, 4.0;
  const MDP mdp(1, 3, 1, Matrix<double>::Ones(3, 1), r, Vector<double>::Ones(1));
  Matrix<double> pi_m(1, 3), mu_m(1, 3);
  pi_m << 0.2, 0.5, 0.3;
  mu_m << 0.6, 0.3, 0.1;
  const PolicyD pi({pi_m}), mu({mu_m});
  double second = 0, mean = 0;
  for (Index a = 0; a < 3; ++a) {
    second += pi_m(0, a) * pi_m(0, a) / mu_m(0, a) * r(0, a) * r(0, a);
    mean += pi_m(0, a) * r(0, a);
  }
  const auto var = compute_pdis_variance(mdp, pi, mu);
  EXPECT_NEAR(var[0](0), second - mean * mean, 1e-12);
}

TEST(PdisVariance, MatchesEnumerationForRandomPairs) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto mdp = random_tabular_mdp(3, 2, 4, 900 + seed, -1.0, 1.0);
    const auto pi = random_policy(3, 2, 4, 1000 + seed, 0.3);
    const auto mu = testing::covering_behavior(pi, 1100 + seed);
    const auto dp = compute_pdis_variance(mdp, pi, mu);
    const auto [mean, var] = oracle::pdis_tables(mdp, pi, mu);
    EXPECT_LT(max_abs_difference(dp, var), kTol) << "seed " << seed;
    EXPECT_LT(max_abs_difference(compute_q_v(mdp, pi).v, mean), kTol);
  }
}

TEST(PdisVariance, RejectsBehaviorOutsideCoverage) {
  const auto mdp = random_tabular_mdp(2, 2, 2, 3, 0.5, 1.0);
  const auto pi = PolicyD::uniform(2, 2, 2);
  EXPECT_THROW(compute_pdis_variance(mdp, pi, deterministic_policy(2, 2, 2, 0)), CoverageError);
}

TEST(OnPolicyVariance, DeterministicSystemHasNoVariance) {
  const auto mdp = deterministic_cycle(4);
  const auto pi = deterministic_policy(2, 2, 4, 0);
  const auto tables = compute_value_tables(mdp, pi);
  for (const auto& v : compute_onpolicy_variance(pi, tables.q_hat, tables.v)) {
    EXPECT_LT(v.cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(OnPolicyVariance, BernoulliTerminalReward) {
  // One coin flip with success probability p leads to a state worth `span`.
  const double p = 0.3, span = 5.0;
  Matrix<double> trans(2, 2);
  trans << 1 - p, p,
           0.0, 1.0;
  Matrix<double> r(2, 1);
  r << 0.0, span;
  Vector<double> p0(2);
  p0 << 1.0, 0.0;
  const MDP mdp(2, 1, 2, trans, r, p0);
  const auto pi = PolicyD::uniform(2, 1, 2);
  const auto tables = compute_value_tables(mdp, pi);
  const auto var = compute_onpolicy_variance(pi, tables.q_hat, tables.v);
  EXPECT_NEAR(var[0](0), p * (1 - p) * span * span, 1e-12);
  EXPECT_NEAR(var[0](0), oracle::pdis_moments(mdp, pi, pi, {0, 0, kNoState}).variance, kTol);
}

TEST(TotalVariance, ComposesConditionalVarianceOverStart) {
  const auto mdp = random_tabular_mdp(3, 2, 3, 77, -1.0, 1.0);
  const auto pi = random_policy(3, 2, 3, 78);
  const auto mu = testing::covering_behavior(pi, 79);
  const auto tables = compute_value_tables(mdp, pi);
  const auto var = compute_pdis_variance(mdp, pi, tables, mu);
  EXPECT_NEAR(total_variance(mdp, var[0], tables.v[0]), oracle::pdis_moments(mdp, pi, mu).variance,
              kTol);
}

TEST(ClampVariance, ClampsTinyNegativesAndRejectsLargeOnes) {
  EXPECT_EQ(detail::clamp_variance(-1e-13, 1.0, "x"), 0.0);
  EXPECT_EQ(detail::clamp_variance(0.5, 1.0, "x"), 0.5);
  EXPECT_THROW(detail::clamp_variance(-1e-6, 1.0, "x"), NumericalError);
}

TEST(ExactDp, LongDoubleInstantiation) {
  const auto mdp = random_tabular_mdp(2, 2, 3, 9);
  const TabularMDP<long double> wide(2, 2, 3, mdp.transition().cast<long double>(),
                                     mdp.reward().cast<long double>(),
                                     mdp.initial_dist().cast<long double>());
  const auto pi = PolicyD::uniform(2, 2, 3);
  const Policy<long double> wide_pi = Policy<long double>::uniform(2, 2, 3);
  const auto narrow = compute_value_tables(mdp, pi);
  const auto tables = compute_value_tables(wide, wide_pi);
  EXPECT_NEAR(static_cast<double>(tables.performance), narrow.performance, 1e-12);
}

}  // namespace
}  // namespace mpe
