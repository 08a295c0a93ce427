// Acceptance criteria 1-10. Each test prints one PASS/FAIL line.

#include <gtest/gtest.h>

#include <chrono>
#include <cstdio>
#include <map>

#include "mpe/harness/compare.hpp"
#include "mpe/harness/verify.hpp"

namespace mpe::harness {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void expect_check(const CheckResult& c, double budget_seconds = 0.0) {
  EXPECT_TRUE(c.passed) << c.suite << '/' << c.name << ": " << c.detail;
  if (budget_seconds > 0) EXPECT_LT(c.seconds, budget_seconds) << c.name << " exceeded its budget";
  std::printf("  %s/%s: %s (%.3f s)\n", c.suite.c_str(), c.name.c_str(), c.detail.c_str(), c.seconds);
}

ResultBundle compare_from(const char* file) {
  auto config = load_config(std::string(MPE_SOURCE_DIR) + "/configs/" + file);
  return run_compare(config);
}

TEST(Acceptance, Criterion01_Unbiasedness) { expect_check(check_unbiasedness(), 10.0); }

TEST(Acceptance, Criterion02_VarianceRecursionOracle) {
  expect_check(check_pdis_variance(), 60.0);
  expect_check(check_value_tables(), 60.0);
}

TEST(Acceptance, Criterion03_QHatIdentity) { expect_check(check_q_hat_identity()); }

TEST(Acceptance, Criterion04_OptimalityOfMuHat) { expect_check(check_optimality(), 120.0); }

TEST(Acceptance, Criterion05_ConditionSoundness) {
  expect_check(check_lemma_conditions());
  expect_check(check_theorem_conditions());
}

TEST(Acceptance, Criterion06_IdenticalPolicyGuarantee) { expect_check(check_identical_policies()); }

TEST(Acceptance, Criterion07_RelativeVarianceOnGridworld) {
  const auto start = Clock::now();
  const auto bundle = compare_from("gridworld_similar.toml");
  const double elapsed = seconds_since(start);
  const auto& row = bundle.relative_variance(Strategy::mpe);
  std::printf("  MPE relative variance %.4f +- %.4f (SE), below 1 in %.1f%% of %zu groups, %.1f s\n",
              row.mean, row.se, 100 * row.fraction_below_one, row.groups, elapsed);
  EXPECT_EQ(row.groups, 30u);
  EXPECT_LT(row.mean + 3 * row.se, 0.7);
  EXPECT_GE(row.fraction_below_one, 0.95);
  EXPECT_LT(elapsed, 15 * 60.0);
}

TEST(Acceptance, Criterion08_EpisodesToParity) {
  const auto similar = compare_from("gridworld_similar.toml");
  const auto mpe = similar.parity(Strategy::mpe);
  std::printf("  epsilon=0.1: MPE parity %.1f episodes (reference %zu)\n", mpe.episodes,
              similar.reference_n);
  EXPECT_LT(mpe.episodes, 0.8 * static_cast<double>(similar.reference_n));

  const auto dissimilar = compare_from("gridworld_dissimilar.toml");
  for (auto s : {Strategy::son, Strategy::sodi}) {
    const auto p = dissimilar.parity(s);
    std::printf("  epsilon=1: %s parity %.1f episodes (reference %zu)\n", to_string(s).c_str(),
                p.episodes, dissimilar.reference_n);
    EXPECT_GT(p.episodes, static_cast<double>(dissimilar.reference_n)) << to_string(s);
  }
}

TEST(Acceptance, Criterion09_FqeExactness) {
  expect_check(check_fqe_exactness());
  expect_check(check_fqe_ladder());
}

TEST(Acceptance, Criterion10_MutationSensitivity) {
  const auto baseline = run_verify(Suite::all);
  EXPECT_TRUE(baseline.passed()) << baseline.render();
  for (auto fault : {FormulaFault::flip_r_hat_sign, FormulaFault::drop_nu}) {
    const auto report = run_verify(Suite::all, fault);
    std::size_t failed = 0;
    for (const auto& c : report.checks) failed += c.passed ? 0 : 1;
    std::printf("  fault %s: %zu of %zu checks fail\n",
                fault == FormulaFault::drop_nu ? "drop-nu" : "r-hat-sign", failed,
                report.checks.size());
    EXPECT_FALSE(report.passed());
  }
  EXPECT_FALSE(run_verify(Suite::oracles, FormulaFault::flip_r_hat_sign).passed());
}

/// Prints "CRITERION n: PASS|FAIL" after each acceptance test.
class CriterionPrinter : public testing::EmptyTestEventListener {
  void OnTestEnd(const testing::TestInfo& info) override {
    const std::string name = info.name();
    const auto number = name.substr(9, 2);
    std::printf("CRITERION %s %s: %s\n", number.c_str(), name.substr(12).c_str(),
                info.result()->Passed() ? "PASS" : "FAIL");
    std::fflush(stdout);
  }
};

}  // namespace
}  // namespace mpe::harness

int main(int argc, char** argv) {
  testing::InitGoogleTest(&argc, argv);
  testing::UnitTest::GetInstance()->listeners().Append(new mpe::harness::CriterionPrinter);
  return RUN_ALL_TESTS();
}
