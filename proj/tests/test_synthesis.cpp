#include <gtest/gtest.h>

#include <cmath>

#include "mpe/simplex_search.hpp"
#include "mpe/synthesis.hpp"
#include "test_support.hpp"

namespace mpe {
namespace {

BanditInstance<double> bandit(std::vector<std::vector<double>> targets, std::vector<double> q) {
  BanditInstance<double> b;
  b.num_actions = static_cast<Index>(q.size());
  b.payoff = Eigen::Map<Eigen::VectorXd>(q.data(), b.num_actions);
  for (auto& pi : targets) b.targets.push_back(Eigen::Map<Eigen::VectorXd>(pi.data(), b.num_actions));
  return b;
}

double bandit_objective(const BanditInstance<double>& b, const Eigen::VectorXd& mu) {
  double total = 0;
  for (const auto& pi : b.targets) {
    for (Index a = 0; a < b.num_actions; ++a) {
      if (mu(a) <= 0 && pi(a) * b.payoff(a) != 0) return std::numeric_limits<double>::infinity();
    }
    total += bandit_is_variance<double>(pi, mu, b.payoff);
  }
  return total;
}

Eigen::VectorXd random_distribution(Index n, SplitMix64& rng) {
  Eigen::VectorXd x(n);
  for (Index i = 0; i < n; ++i) x(i) = -std::log1p(-rng.uniform());
  return x / x.sum();
}

struct Instance {
  MDP mdp;
  PolicySetD targets;
  std::vector<ValueTables<double>> tables;
  PolicyD mu_hat;
};

Instance make_instance(std::uint64_t seed, Index S, Index A, Index T, std::size_t K,
                       double epsilon) {
  Instance inst{random_tabular_mdp(S, A, T, seed, -0.5, 1.0), {}, {}, {}};
  inst.targets = build_policy_set(inst.mdp, {K, BasePolicy::random_softmax, epsilon, seed + 1});
  for (const auto& pi : inst.targets) inst.tables.push_back(compute_value_tables(inst.mdp, pi));
  inst.mu_hat =
      mu_hat_rl(inst.targets, std::span<const ValueTables<double>>(inst.tables)).policy;
  return inst;
}

TEST(MuStarBandit, SinglePolicyMatchesGridSearch) {
  const auto b = bandit({{0.5, 0.5}}, {1.0, 2.0});
  const auto mu = mu_star_bandit(b);
  EXPECT_NEAR(mu(0), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(mu(1), 2.0 / 3.0, 1e-12);
  const auto best = oracle::minimize_on_simplex(2, [&](const Eigen::VectorXd& x) {
    return bandit_objective(b, x);
  });
  EXPECT_NEAR(best.point(0), 1.0 / 3.0, 1e-3);
  EXPECT_GE(best.value, bandit_objective(b, mu) - 1e-12);
}

TEST(MuStarBandit, ZeroPayoffGivesUniform) {
  const auto mu = mu_star_bandit(bandit({{0.2, 0.3, 0.5}}, {0.0, 0.0, 0.0}));
  for (Index a = 0; a < 3; ++a) EXPECT_DOUBLE_EQ(mu(a), 1.0 / 3.0);
}

TEST(MuStarBandit, DisjointPoliciesWithEqualPayoffSplitEvenly) {
  const auto mu = mu_star_bandit(bandit({{1.0, 0.0}, {0.0, 1.0}}, {2.0, 2.0}));
  EXPECT_DOUBLE_EQ(mu(0), 0.5);
  EXPECT_DOUBLE_EQ(mu(1), 0.5);
}

TEST(MuStarBandit, NeverBeatenOnTheGrid) {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    BanditInstance<double> b;
    b.num_actions = 3;
    b.payoff = Eigen::Vector3d(rng.uniform() * 3 - 1, rng.uniform() * 3 - 1, rng.uniform() * 3 - 1);
    for (int k = 0; k < 3; ++k) b.targets.push_back(random_distribution(3, rng));
    const double at_mu = bandit_objective(b, mu_star_bandit(b));
    const auto best = oracle::minimize_on_simplex(
        3, [&](const Eigen::VectorXd& x) { return bandit_objective(b, x); }, 1e-2);
    EXPECT_GE(best.value, at_mu - 1e-9);
  }
}

TEST(BanditSimilarity, IdenticalPoliciesHaveUnitEta) {
  const auto report = similarity_report_bandit(bandit({{0.3, 0.7}, {0.3, 0.7}}, {1.0, -2.0}));
  for (const auto& eta : report.eta) {
    for (Index a = 0; a < 2; ++a) EXPECT_NEAR(eta(a), 1.0, 1e-12);
  }
  EXPECT_NEAR(report.eta_max / report.eta_min, 1.0, 1e-12);
  EXPECT_TRUE(report.condition_lemma4[0]);
  EXPECT_TRUE(report.condition_lemma4[1]);
}

TEST(BanditSimilarity, DisjointSupportsDerivedFromFirstPrinciples) {
  const auto b = bandit({{1.0, 0.0}, {0.0, 1.0}}, {2.0, 2.0});
  const auto report = similarity_report_bandit(b);
  // w_1 = (4, 0), w_2 = (0, 4), w_bar = (2, 2).
  EXPECT_DOUBLE_EQ(report.eta[0](0), 2.0);
  EXPECT_DOUBLE_EQ(report.eta[0](1), 0.0);
  EXPECT_DOUBLE_EQ(report.eta_min, 0.0);
  EXPECT_DOUBLE_EQ(report.eta_max, 2.0);
  // The ratio is unbounded while (sum pi |q|)^2 = 4 > 0, so nothing is certified.
  EXPECT_FALSE(report.condition_lemma4[0]);
  EXPECT_FALSE(report.condition_lemma3[0]);
  // And indeed mu* = (1/2, 1/2) has variance 4 against 0 on-policy.
  EXPECT_DOUBLE_EQ(report.variance_mu_star[0], 4.0);
  EXPECT_DOUBLE_EQ(report.variance_onpolicy[0], 0.0);
}

TEST(BanditSimilarity, ZeroWeightActionsAreExcluded) {
  const auto report = similarity_report_bandit(bandit({{0.5, 0.5, 0.0}, {0.5, 0.5, 0.0}}, {1, 2, 3}));
  EXPECT_TRUE(std::isnan(report.eta[0](2)));
  EXPECT_DOUBLE_EQ(report.eta_min, 1.0);
}

TEST(BanditSimilarity, ConstantPayoffHasNoSpread) {
  const auto report = similarity_report_bandit(bandit({{0.2, 0.8}, {0.2, 0.8}}, {3.0, 3.0}));
  EXPECT_NEAR(report.delta[0], 0.0, 1e-12);
  EXPECT_TRUE(report.condition_lemma3[0]);
}

TEST(BanditSimilarity, ConditionsImplyVarianceReduction) {
  SplitMix64 rng(11);
  int certified4 = 0, certified3 = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Index A = 2 + static_cast<Index>(rng.uniform() * 3);
    const std::size_t K = 2 + static_cast<std::size_t>(rng.uniform() * 3);
    BanditInstance<double> b;
    b.num_actions = A;
    b.payoff = Eigen::VectorXd(A);
    for (Index a = 0; a < A; ++a) b.payoff(a) = rng.uniform() * 3 - 0.5;
    const Eigen::VectorXd base = random_distribution(A, rng);
    const double eps = rng.uniform() * 0.3;
    for (std::size_t k = 0; k < K; ++k) {
      b.targets.push_back((1 - eps) * base + eps * random_distribution(A, rng));
    }
    const auto report = similarity_report_bandit(b);
    for (std::size_t k = 0; k < K; ++k) {
      if (report.condition_lemma4[k]) {
        ++certified4;
        EXPECT_LE(report.variance_mu_star[k], report.variance_onpolicy[k] + 1e-10);
      }
      if (report.condition_lemma3[k]) {
        ++certified3;
        const double frac = 1.0 / static_cast<double>(K);
        EXPECT_LE(frac * report.variance_mu_star[k], report.variance_onpolicy[k] + 1e-10);
      }
    }
  }
  EXPECT_GT(certified4, 0);
  EXPECT_GT(certified3, certified4);
}

TEST(MuHatRl, FollowsDeterministicTargetSupport) {
  const auto mdp = random_tabular_mdp(3, 3, 3, 1, 0.2, 1.0);
  Matrix<double> m = Matrix<double>::Zero(3, 3);
  m.col(1).setOnes();
  const PolicySetD targets({PolicyD(StateActionTable<double>(3, m))});
  const std::vector<ValueTables<double>> tables{compute_value_tables(mdp, targets[0])};
  const auto mu = mu_hat_rl(targets, std::span<const ValueTables<double>>(tables));
  EXPECT_EQ(mu.provenance, Provenance::rl_mu_hat);
  for (Index t = 0; t < 3; ++t) EXPECT_LT((mu.policy.at(t) - m).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MuHatRl, IdenticalTargetsCollapseToSinglePolicyForm) {
  const auto mdp = random_tabular_mdp(3, 2, 3, 2, -1.0, 1.0);
  const auto pi = random_policy(3, 2, 3, 3);
  const PolicySetD targets({pi, pi, pi});
  const auto tables = compute_value_tables(mdp, pi);
  const std::vector<ValueTables<double>> all(3, tables);
  const auto mu = mu_hat_rl(targets, std::span<const ValueTables<double>>(all)).policy;
  for (Index t = 0; t < 3; ++t) {
    Eigen::MatrixXd expected = pi.at(t).cwiseProduct(tables.q_hat[t].cwiseSqrt());
    for (Index s = 0; s < 3; ++s) expected.row(s) /= expected.row(s).sum();
    EXPECT_LT((mu.at(t) - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(MuHatRl, ZeroWeightsFallBackToUniform) {
  const MDP mdp(2, 2, 2, Matrix<double>::Constant(4, 2, 0.5), Matrix<double>::Zero(2, 2),
                Vector<double>::Constant(2, 0.5));
  const PolicySetD targets({random_policy(2, 2, 2, 1), random_policy(2, 2, 2, 2)});
  std::vector<ValueTables<double>> tables;
  for (const auto& pi : targets) tables.push_back(compute_value_tables(mdp, pi));
  const auto mu = mu_hat_rl(targets, std::span<const ValueTables<double>>(tables)).policy;
  for (Index t = 0; t < 2; ++t) EXPECT_EQ(mu.at(t), Matrix<double>::Constant(2, 2, 0.5));
}

TEST(MuHatRl, RejectsNegativeQHat) {
  const PolicySetD targets({PolicyD::uniform(1, 2, 1)});
  std::vector<StateActionTable<double>> q_hat{{Matrix<double>::Constant(1, 2, -1.0)}};
  EXPECT_THROW(mu_hat_rl(targets, std::span<const StateActionTable<double>>(q_hat)),
               InvalidInputError);
}

TEST(MuHatRl, NormalizedSupportedAndScaleInvariant) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto inst = make_instance(seed * 7, 3, 3, 3, 3, 0.5);
    const auto coverage = coverage_check(inst.mu_hat, inst.targets,
                                         std::span<const ValueTables<double>>(inst.tables));
    EXPECT_TRUE(coverage.lambda_hat);
    for (Index t = 0; t < 3; ++t) {
      EXPECT_LT((inst.mu_hat.at(t).rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
    }
    std::vector<StateActionTable<double>> scaled;
    for (const auto& tab : inst.tables) {
      StateActionTable<double> q_hat = tab.q_hat;
      for (auto& m : q_hat) m *= 37.5;
      scaled.push_back(q_hat);
    }
    const auto mu2 = mu_hat_rl(inst.targets, std::span<const StateActionTable<double>>(scaled));
    for (Index t = 0; t < 3; ++t) {
      EXPECT_LT((mu2.policy.at(t) - inst.mu_hat.at(t)).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(MuHatRl, GridSearchNeverImprovesObjective) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto inst = make_instance(100 + seed, 2, 2, 2, 2, 0.7);
    const auto tables = std::span<const ValueTables<double>>(inst.tables);
    for (Index t = 0; t < 2; ++t) {
      for (Index s = 0; s < 2; ++s) {
        const double at_mu =
            behavior_objective(inst.targets, tables, t, s, inst.mu_hat.at(t).row(s));
        const auto best = oracle::minimize_on_simplex(2, [&](const Eigen::VectorXd& x) {
          return behavior_objective(inst.targets, tables, t, s, x);
        });
        EXPECT_GE(best.value, at_mu - 1e-6);
      }
    }
  }
}

TEST(Coverage, UniformBehaviorIsInEverySet) {
  const auto inst = make_instance(5, 3, 2, 3, 2, 1.0);
  const auto report = coverage_check(PolicyD::uniform(3, 2, 3), inst.targets,
                                     std::span<const ValueTables<double>>(inst.tables));
  EXPECT_TRUE(report.lambda_minus);
  EXPECT_TRUE(report.lambda);
  EXPECT_TRUE(report.lambda_hat);
}

TEST(Coverage, DroppingAWeightedActionLeavesLambdaHat) {
  const auto inst = make_instance(6, 2, 2, 2, 1, 1.0);
  Matrix<double> m(2, 2);
  m << 1.0, 0.0,
       0.5, 0.5;
  const PolicyD mu(StateActionTable<double>(2, m));
  const auto report =
      coverage_check(mu, inst.targets, std::span<const ValueTables<double>>(inst.tables));
  EXPECT_FALSE(report.lambda_minus);
  EXPECT_FALSE(report.lambda_hat);
  EXPECT_FALSE(report.in_lambda_hat[0](0, 1));
  EXPECT_TRUE(report.in_lambda_hat[0](1, 1));
}

TEST(RlSimilarity, IdenticalTargetsSatisfyConditionEverywhere) {
  for (std::size_t K : {1u, 2u, 5u}) {
    const auto inst = make_instance(40 + K, 3, 3, 4, K, 0.0);
    const auto report = similarity_report_rl(inst.mdp, inst.targets,
                                             std::span<const ValueTables<double>>(inst.tables),
                                             inst.mu_hat);
    EXPECT_TRUE(report.all_thm4());
    for (std::size_t t = 0; t < 4; ++t) EXPECT_NEAR(report.eta_max[t], 1.0, 1e-12);
  }
}

TEST(RlSimilarity, SinglePolicyMatchesBanditFormPerState) {
  const auto inst = make_instance(77, 2, 3, 1, 1, 1.0);
  const auto report = similarity_report_rl(
      inst.mdp, inst.targets, std::span<const ValueTables<double>>(inst.tables), inst.mu_hat);
  for (Index s = 0; s < 2; ++s) {
    // With K = 1 and T = 1, q_hat = q^2 and each state is a bandit.
    BanditInstance<double> b;
    b.num_actions = 3;
    b.payoff = inst.tables[0].q[0].row(s).transpose();
    b.targets.push_back(inst.targets[0].at(0).row(s).transpose());
    const auto bandit_report = similarity_report_bandit(b);
    EXPECT_EQ(static_cast<bool>(report.condition_thm4_local[0][0](s)),
              static_cast<bool>(bandit_report.condition_lemma4[0]));
  }
}

TEST(RlSimilarity, CertifiedConditionsImplyExactVarianceReduction) {
  int certified4 = 0, certified3 = 0, cells = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const double eps = std::vector<double>{0.0, 0.02, 0.1, 0.4}[seed % 4];
    const auto inst = make_instance(1000 + seed, 3, 2 + seed % 2, 3, 2, eps);
    const auto report = similarity_report_rl(
        inst.mdp, inst.targets, std::span<const ValueTables<double>>(inst.tables), inst.mu_hat);
    for (std::size_t k = 0; k < 2; ++k) {
      const auto v_mu = compute_pdis_variance(inst.mdp, inst.targets[k], inst.tables[k], inst.mu_hat);
      const auto v_on =
          compute_onpolicy_variance(inst.targets[k], inst.tables[k].q_hat, inst.tables[k].v);
      for (std::size_t t = 0; t < 3; ++t) {
        for (Index s = 0; s < 3; ++s) {
          ++cells;
          if (report.condition_thm4[k][t](s)) {
            ++certified4;
            EXPECT_LE(v_mu[t](s), v_on[t](s) + 1e-10) << "seed " << seed;
          }
          if (report.condition_thm3[k][t](s)) {
            ++certified3;
            EXPECT_LE(report.sample_fraction[k] * v_mu[t](s), v_on[t](s) + 1e-10)
                << "seed " << seed;
          }
        }
      }
    }
  }
  EXPECT_GT(certified4, cells / 10);
  EXPECT_GE(certified3, certified4);
}

}  // namespace
}  // namespace mpe
