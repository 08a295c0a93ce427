#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "mpe/enumerate.hpp"
#include "mpe/dp.hpp"
#include "mpe/sampling.hpp"
#include "test_support.hpp"

namespace mpe {
namespace {

TEST(Validate, AcceptsWellFormedMdp) {
  EXPECT_TRUE(validate(testing::two_state_mdp()).empty());
}

TEST(Validate, ReportsShortRowWithIndices) {
  Matrix<double> p(4, 2);
  p << 0.5, 0.4,
       0.2, 0.8,
       0.5, 0.5,
       0.9, 0.1;
  const MDP mdp(2, 2, 2, p, Matrix<double>::Zero(2, 2), Vector<double>::Constant(2, 0.5));
  const auto errors = validate(mdp);
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_EQ(errors[0], "row sum 0.9 at (s=0,a=0)");
}

TEST(Validate, ReportsNegativeInitialMass) {
  auto base = testing::two_state_mdp();
  Vector<double> p0(2);
  p0 << 1.1, -0.1;
  const MDP mdp(2, 2, 2, base.transition(), base.reward(), p0);
  const auto errors = validate(mdp);
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_NE(errors[0].find("negative initial mass"), std::string::npos);
  EXPECT_THROW(require_valid(mdp), InvalidInputError);
}

TEST(Validate, RejectsNonFiniteReward) {
  auto base = testing::two_state_mdp();
  Matrix<double> r = base.reward();
  r(1, 1) = std::nan("");
  const MDP mdp(2, 2, 2, base.transition(), r, base.initial_dist());
  EXPECT_FALSE(validate(mdp).empty());
}

TEST(Validate, PolicyRowsMustSumToOne) {
  Matrix<double> m(1, 2);
  m << 0.6, 0.6;
  EXPECT_FALSE(validate(PolicyD({m})).empty());
  EXPECT_TRUE(validate(PolicyD::uniform(3, 2, 4)).empty());
}

TEST(SampleEpisode, DeterministicDynamicsGiveTheUniqueTrajectory) {
  Matrix<double> p(2, 2);
  p << 0.0, 1.0,
       1.0, 0.0;
  Matrix<double> r(2, 1);
  r << 1.0, 2.0;
  Vector<double> p0(2);
  p0 << 1.0, 0.0;
  const MDP mdp(2, 1, 3, p, r, p0);
  const auto traj = sample_episode(mdp, PolicyD::uniform(2, 1, 3), 99);
  ASSERT_EQ(traj.size(), 3u);
  EXPECT_EQ(traj.steps[0].state, 0);
  EXPECT_EQ(traj.steps[1].state, 1);
  EXPECT_EQ(traj.steps[2].state, 0);
  EXPECT_EQ(traj.steps[2].next_state, kNoState);
  EXPECT_DOUBLE_EQ(traj.total_return(), 4.0);
}

TEST(SampleEpisode, SameSeedSameTrajectory) {
  const auto mdp = random_tabular_mdp(4, 3, 6, 5);
  const auto mu = random_policy(4, 3, 6, 6);
  const auto a = sample_episode(mdp, mu, 1234);
  const auto b = sample_episode(mdp, mu, 1234);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.steps[i].state, b.steps[i].state);
    EXPECT_EQ(a.steps[i].action, b.steps[i].action);
    EXPECT_EQ(a.steps[i].next_state, b.steps[i].next_state);
    EXPECT_EQ(a.steps[i].reward, b.steps[i].reward);
  }
}

TEST(SampleEpisode, RejectsMismatchedPolicy) {
  EXPECT_THROW(sample_episode(testing::two_state_mdp(), PolicyD::uniform(3, 2, 2), 1),
               DimensionError);
}

TEST(SampleEpisode, TransitionFrequenciesMatchWithinThreeSigma) {
  const auto mdp = testing::two_state_mdp(2);
  const auto mu = PolicyD::uniform(2, 2, 2);
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(4, 2);
  const std::size_t n = 100000;
  for (std::size_t i = 0; i < n; ++i) {
    const auto traj = sample_episode(mdp, mu, episode_seed(7, 0, i));
    const auto& step = traj.steps[0];
    counts(mdp.row(step.state, step.action), step.next_state) += 1.0;
  }
  for (Index row = 0; row < 4; ++row) {
    const double visits = counts.row(row).sum();
    ASSERT_GT(visits, 0.0);
    for (Index next = 0; next < 2; ++next) {
      const double p = mdp.transition()(row, next);
      const double bound = 3.0 * std::sqrt(p * (1.0 - p) / visits);
      EXPECT_NEAR(counts(row, next) / visits, p, bound) << "row " << row;
    }
  }
}

TEST(SampleEpisode, StateMarginalsMatchEnumeration) {
  const auto mdp = random_tabular_mdp(3, 2, 3, 17);
  const auto mu = random_policy(3, 2, 3, 18);
  Eigen::MatrixXd exact = Eigen::MatrixXd::Zero(3, 3);
  for_each_trajectory(mdp, mu, [&](const Trajectory& traj, double p) {
    for (const auto& step : traj.steps) exact(step.t, step.state) += p;
  });
  const std::size_t n = 100000;
  Eigen::MatrixXd freq = Eigen::MatrixXd::Zero(3, 3);
  for (const auto& traj : sample_episodes(mdp, mu, n, 21)) {
    for (const auto& step : traj.steps) freq(step.t, step.state) += 1.0 / static_cast<double>(n);
  }
  for (Index t = 0; t < 3; ++t) {
    for (Index s = 0; s < 3; ++s) {
      const double p = exact(t, s);
      EXPECT_NEAR(freq(t, s), p, 3.0 * std::sqrt(p * (1 - p) / static_cast<double>(n)) + 1e-12);
    }
  }
}

TEST(Enumerate, SingleStateSingleActionHasOneTrajectory) {
  const MDP mdp(1, 1, 3, Matrix<double>::Ones(1, 1), Matrix<double>::Ones(1, 1),
                Vector<double>::Ones(1));
  const auto all = enumerate_trajectories(mdp, PolicyD::uniform(1, 1, 3));
  ASSERT_EQ(all.size(), 1u);
  EXPECT_DOUBLE_EQ(all[0].probability, 1.0);
  EXPECT_EQ(all[0].trajectory.size(), 3u);
}

TEST(Enumerate, UniformTwoByTwoGivesSixteenEqualTrajectories) {
  const MDP mdp(2, 2, 2, Matrix<double>::Constant(4, 2, 0.5), Matrix<double>::Zero(2, 2),
                Vector<double>::Constant(2, 0.5));
  const auto all = enumerate_trajectories(mdp, PolicyD::uniform(2, 2, 2));
  ASSERT_EQ(all.size(), 16u);
  for (const auto& wt : all) EXPECT_DOUBLE_EQ(wt.probability, 1.0 / 16.0);
}

TEST(Enumerate, ProbabilitiesSumToOneAndReturnMeanIsPerformance) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto mdp = random_tabular_mdp(3, 2, 4, 100 + seed, -1.0, 1.0);
    const auto pi = random_policy(3, 2, 4, 200 + seed, 0.3);
    double mass = 0, mean = 0;
    std::map<std::vector<Index>, int> seen;
    for_each_trajectory(mdp, pi, [&](const Trajectory& traj, double p) {
      mass += p;
      mean += p * traj.total_return();
      std::vector<Index> key;
      for (const auto& st : traj.steps) {
        key.push_back(st.state);
        key.push_back(st.action);
      }
      ++seen[key];
    });
    EXPECT_NEAR(mass, 1.0, 1e-10);
    EXPECT_NEAR(mean, compute_q_v(mdp, pi).performance, 1e-10);
    for (const auto& [key, count] : seen) EXPECT_EQ(count, 1);
  }
}

TEST(Enumerate, CapIsEnforced) {
  const auto mdp = random_tabular_mdp(4, 4, 5, 1);
  const auto mu = PolicyD::uniform(4, 4, 5);
  std::size_t count = 0;
  auto counter = [&count](const Trajectory&, double) { ++count; };
  EXPECT_THROW(for_each_trajectory(mdp, mu, counter), EnumerationCapError);
  EXPECT_EQ(count, 0u);
  for_each_trajectory(mdp, mu, counter, {}, {2e6});
  EXPECT_EQ(count, std::size_t{4 * 16 * 16 * 16 * 16 * 4});
}

TEST(Rng, DerivedSeedsDependOnWholePath) {
  EXPECT_NE(derive_seed(1, {0, 1}), derive_seed(1, {1, 0}));
  EXPECT_NE(derive_seed(1, {0}), derive_seed(2, {0}));
  EXPECT_EQ(derive_seed(3, {4, 5}), derive_seed(3, {4, 5}));
}

TEST(Rng, UniformStaysInUnitInterval) {
  SplitMix64 rng(0);
  double lo = 1, hi = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  EXPECT_GE(lo, 0.0);
  EXPECT_LT(hi, 1.0);
}

}  // namespace
}  // namespace mpe
