#include "mpe/harness/verify.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>

#include "mpe/dp.hpp"
#include "mpe/envs.hpp"
#include "mpe/fqe.hpp"
#include "mpe/oracle.hpp"
#include "mpe/simplex_search.hpp"
#include "mpe/synthesis.hpp"

namespace mpe::harness {

namespace {

constexpr double kOracleTolerance = 1e-10;
constexpr double kIdentityTolerance = 1e-9;
constexpr double kFqeTolerance = 1e-9;
constexpr double kOptimalitySlack = 1e-6;

/// Collects failures; the first few are kept for the report.
struct Tally {
  std::size_t checked = 0;
  std::size_t failed = 0;
  std::vector<std::string> examples;

  void expect(bool ok, const std::string& what) {
    ++checked;
    if (ok) return;
    ++failed;
    if (examples.size() < 3) examples.push_back(what);
  }
  std::string summary() const {
    std::ostringstream out;
    out << checked - failed << "/" << checked << " comparisons hold";
    for (const auto& e : examples) out << "; " << e;
    return out.str();
  }
};

std::string num(double x) { return detail::fmt_double(x); }

CheckResult timed(const std::string& suite, const std::string& name,
                  const std::function<void(CheckResult&)>& body) {
  CheckResult result{suite, name, false, "", 0.0};
  const auto start = std::chrono::steady_clock::now();
  try {
    body(result);
  } catch (const std::exception& e) {
    result.passed = false;
    result.detail = std::string("exception: ") + e.what();
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

DpOptions unchecked(FormulaFault fault) {
  DpOptions options;
  options.verify_q_hat_identity = false;
  options.fault = fault;
  return options;
}

double table_scale(const StateActionTable<double>& t) {
  double s = 1.0;
  for (const auto& m : t) s = std::max(s, m.cwiseAbs().maxCoeff());
  return s;
}

double table_scale(const StateTable<double>& t) {
  double s = 1.0;
  for (const auto& v : t) s = std::max(s, v.cwiseAbs().maxCoeff());
  return s;
}

double max_gap(const StateTable<double>& a, const StateTable<double>& b) {
  double g = 0;
  for (std::size_t t = 0; t < a.size(); ++t) g = std::max(g, (a[t] - b[t]).cwiseAbs().maxCoeff());
  return g;
}

PolicyD mixture(const PolicyD& a, const PolicyD& b, double weight_a) {
  StateActionTable<double> probs;
  for (Index t = 0; t < a.horizon(); ++t) probs.push_back(weight_a * a.at(t) + (1 - weight_a) * b.at(t));
  return PolicyD(std::move(probs));
}

/// Random micro instance: |S| in {2,3}, |A| in {2,3}, T in {2,3,4}.
MDP random_micro_mdp(std::uint64_t seed) {
  SplitMix64 rng(derive_seed(seed, {7}));
  const Index S = 2 + static_cast<Index>(rng() % 2);
  const Index A = 2 + static_cast<Index>(rng() % 2);
  const Index T = 2 + static_cast<Index>(rng() % 3);
  return random_tabular_mdp(S, A, T, seed, -1.0, 1.0);
}

std::vector<ValueTables<double>> tables_for(const MDP& mdp, const PolicySetD& targets,
                                            const DpOptions& options) {
  std::vector<ValueTables<double>> out;
  for (const auto& pi : targets) out.push_back(compute_value_tables(mdp, pi, options));
  return out;
}

/// (t, s, a) cells reached with positive probability under some logger.
std::vector<BoolMatrix> logger_support(const MDP& mdp, const std::vector<PolicyD>& loggers) {
  const Index T = mdp.horizon(), S = mdp.num_states(), A = mdp.num_actions();
  std::vector<BoolMatrix> cells(static_cast<std::size_t>(T), BoolMatrix::Constant(S, A, false));
  for (const auto& mu : loggers) {
    BoolVector states = (mdp.initial_dist().array() > 0).matrix();
    for (Index t = 0; t < T; ++t) {
      BoolVector next = BoolVector::Constant(S, false);
      for (Index s = 0; s < S; ++s) {
        if (!states(s)) continue;
        for (Index a = 0; a < A; ++a) {
          if (mu(t, s, a) <= 0) continue;
          cells[static_cast<std::size_t>(t)](s, a) = true;
          for (Index n = 0; n < S; ++n) next(n) = next(n) || mdp.transition(s, a, n) > 0;
        }
      }
      states = next;
    }
  }
  return cells;
}

double max_gap_on(const StateActionTable<double>& a, const StateActionTable<double>& b,
                  const std::vector<BoolMatrix>& cells) {
  double g = 0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (Index i = 0; i < a[t].size(); ++i) {
      if (cells[t].data()[i]) g = std::max(g, std::abs(a[t].data()[i] - b[t].data()[i]));
    }
  }
  return g;
}

void finish(CheckResult& r, const Tally& tally) {
  r.passed = tally.failed == 0 && tally.checked > 0;
  r.detail = tally.summary();
}

}  // namespace

std::string to_string(Suite s) {
  switch (s) {
    case Suite::oracles: return "oracles";
    case Suite::optimality: return "optimality";
    case Suite::conditions: return "conditions";
    case Suite::all: return "all";
  }
  return "?";
}

Suite suite_from_string(const std::string& name) {
  for (auto s : {Suite::oracles, Suite::optimality, Suite::conditions, Suite::all}) {
    if (to_string(s) == name) return s;
  }
  throw InvalidInputError("unknown suite " + name);
}

bool VerifyReport::passed() const {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return !checks.empty();
}

const CheckResult& VerifyReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw InvalidInputError("no check named " + name);
}

std::string VerifyReport::render() const {
  std::ostringstream out;
  for (const auto& c : checks) {
    out << (c.passed ? "[PASS] " : "[FAIL] ") << c.suite << '/' << c.name << " (" << std::fixed
        << std::setprecision(3) << c.seconds << " s): " << c.detail << '\n';
    out.unsetf(std::ios::floatfield);
  }
  out << (passed() ? "verify: all checks passed" : "verify: FAILED") << '\n';
  return out.str();
}

CheckResult check_unbiasedness(FormulaFault fault) {
  return timed("oracles", "unbiasedness", [&](CheckResult& r) {
    Tally tally;
    for (const auto& f : build_micro_suite()) {
      const auto tables = tables_for(f.mdp, f.targets, unchecked(fault));
      const auto mu = mu_hat_rl(f.targets, std::span<const ValueTables<double>>(tables)).policy;
      for (std::size_t k = 0; k < f.targets.size(); ++k) {
        const double truth = oracle::pdis_moments(f.mdp, f.targets[k], f.targets[k]).mean;
        const double mean = oracle::pdis_moments(f.mdp, f.targets[k], mu).mean;
        tally.expect(std::abs(mean - truth) <= kOracleTolerance * std::max(1.0, std::abs(truth)),
                     f.name + " k=" + std::to_string(k) + ": E[PDIS]=" + num(mean) +
                         " vs J=" + num(truth));
      }
    }
    finish(r, tally);
  });
}

CheckResult check_value_tables(FormulaFault fault) {
  return timed("oracles", "value_tables", [&](CheckResult& r) {
    Tally tally;
    std::vector<MicroFixture> cases = build_micro_suite();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto mdp = random_micro_mdp(500 + seed);
      auto pi = random_policy(mdp.num_states(), mdp.num_actions(), mdp.horizon(), 900 + seed, 0.2);
      cases.push_back({"random" + std::to_string(seed), std::move(mdp), PolicySetD({pi})});
    }
    for (const auto& f : cases) {
      for (const auto& pi : f.targets) {
        const auto dp = compute_value_tables(f.mdp, pi, unchecked(fault));
        const auto [q, q_hat] = oracle::return_moment_tables(f.mdp, pi);
        StateTable<double> v;
        for (Index t = 0; t < pi.horizon(); ++t) {
          v.push_back(detail::policy_average(pi.at(t), q[static_cast<std::size_t>(t)]));
        }
        const auto nu = oracle::successor_value_variance(f.mdp, v);
        const double gq = max_abs_difference(dp.q, q);
        const double gh = max_abs_difference(dp.q_hat, q_hat);
        const double gn = max_abs_difference(dp.nu, nu);
        tally.expect(gq <= kOracleTolerance * table_scale(q), f.name + ": q gap " + num(gq));
        tally.expect(gh <= kOracleTolerance * table_scale(q_hat), f.name + ": q_hat gap " + num(gh));
        tally.expect(gn <= kOracleTolerance * table_scale(nu), f.name + ": nu gap " + num(gn));
      }
    }
    finish(r, tally);
  });
}

CheckResult check_pdis_variance(FormulaFault fault) {
  return timed("oracles", "pdis_variance", [&](CheckResult& r) {
    Tally tally;
    std::uint64_t seed = 0;
    for (const auto& f : build_micro_suite()) {
      const Index S = f.mdp.num_states(), A = f.mdp.num_actions(), T = f.mdp.horizon();
      for (int pair = 0; pair < 20; ++pair, ++seed) {
        const PolicyD target = pair % 2 == 0 ? f.targets[static_cast<std::size_t>(pair / 2) % f.targets.size()]
                                             : random_policy(S, A, T, 3000 + seed, 0.3);
        const PolicyD behavior = mixture(target, random_policy(S, A, T, 4000 + seed), 0.5);
        const auto tables = compute_value_tables(f.mdp, target, unchecked(fault));
        const auto dp = compute_pdis_variance(f.mdp, target, tables, behavior, fault);
        const auto [mean, var] = oracle::pdis_tables(f.mdp, target, behavior);
        const double gap = max_gap(dp, var);
        tally.expect(gap <= kOracleTolerance * table_scale(var),
                     f.name + " pair " + std::to_string(pair) + ": V gap " + num(gap));
        const auto total = total_variance(f.mdp, dp[0], tables.v[0]);
        const double oracle_total = oracle::pdis_moments(f.mdp, target, behavior).variance;
        tally.expect(std::abs(total - oracle_total) <= kOracleTolerance * std::max(1.0, oracle_total),
                     f.name + " pair " + std::to_string(pair) + ": total V gap " +
                         num(std::abs(total - oracle_total)));
      }
      // Closed-form on-policy variance.
      for (const auto& pi : f.targets) {
        const auto tables = compute_value_tables(f.mdp, pi, unchecked(fault));
        const auto closed = compute_onpolicy_variance(pi, tables.q_hat, tables.v);
        const auto [mean, var] = oracle::pdis_tables(f.mdp, pi, pi);
        const double gap = max_gap(closed, var);
        tally.expect(gap <= kOracleTolerance * table_scale(var),
                     f.name + ": on-policy closed form gap " + num(gap));
      }
    }
    finish(r, tally);
  });
}

CheckResult check_q_hat_identity(FormulaFault fault) {
  return timed("oracles", "q_hat_identity", [&](CheckResult& r) {
    Tally tally;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto mdp = random_micro_mdp(seed);
      const auto pi = random_policy(mdp.num_states(), mdp.num_actions(), mdp.horizon(), 100 + seed,
                                    seed % 3 == 0 ? 0.3 : 0.0);
      const auto qv = compute_q_v(mdp, pi);
      const auto nu = compute_nu(mdp, qv.v);
      const auto bellman = compute_q_hat(mdp, pi, compute_r_hat(mdp, qv.q, fault));
      const auto onpolicy = compute_pdis_variance(mdp, pi, qv, nu, pi, fault);
      const auto defining = compute_q_hat_defining(mdp, qv.q, nu, onpolicy, fault);
      const double gap = max_abs_difference(bellman, defining);
      tally.expect(gap <= kIdentityTolerance * table_scale(defining),
                   "instance " + std::to_string(seed) + ": gap " + num(gap));
    }
    finish(r, tally);
  });
}

CheckResult check_fqe_exactness(FormulaFault fault) {
  return timed("oracles", "fqe_exactness", [&](CheckResult& r) {
    Tally tally;
    for (const auto& f : build_micro_suite()) {
      const std::vector<PolicyD> loggers{
          PolicyD::uniform(f.mdp.num_states(), f.mdp.num_actions(), f.mdp.horizon())};
      const auto data = exact_weighted_dataset(f.mdp, loggers);
      const auto cells = logger_support(f.mdp, loggers);
      std::vector<ValueTables<double>> exact;
      for (const auto& pi : f.targets) {
        exact.push_back(compute_value_tables(f.mdp, pi, unchecked(fault)));
        const auto fqe = fqe_evaluate(data, pi);
        const double gq = max_gap_on(fqe.q_est, exact.back().q, cells);
        const double gh = max_gap_on(fqe.q_hat_est, exact.back().q_hat, cells);
        tally.expect(gq <= kFqeTolerance * table_scale(exact.back().q), f.name + ": FQE q gap " + num(gq));
        tally.expect(gh <= kFqeTolerance * table_scale(exact.back().q_hat),
                     f.name + ": FQE q_hat gap " + num(gh));
      }
      const auto synth = algorithm1_mpe(data, f.targets);
      const auto mu = mu_hat_rl(f.targets, std::span<const ValueTables<double>>(exact)).policy;
      double gap = 0;
      for (Index t = 0; t < f.mdp.horizon(); ++t) {
        for (Index s = 0; s < f.mdp.num_states(); ++s) {
          if (!cells[static_cast<std::size_t>(t)].row(s).any()) continue;
          gap = std::max(gap, (synth.behavior.policy.at(t).row(s) - mu.at(t).row(s)).cwiseAbs().maxCoeff());
        }
      }
      tally.expect(gap <= kFqeTolerance, f.name + ": algorithm-1 behavior gap " + num(gap));
    }
    finish(r, tally);
  });
}

CheckResult check_fqe_ladder() {
  return timed("oracles", "fqe_ladder", [&](CheckResult& r) {
    Tally tally;
    for (const auto& f : build_micro_suite()) {
      const std::vector<PolicyD> loggers{
          PolicyD::uniform(f.mdp.num_states(), f.mdp.num_actions(), f.mdp.horizon())};
      const auto cells = logger_support(f.mdp, loggers);
      const auto exact = compute_value_tables(f.mdp, f.targets[0]);
      double previous = std::numeric_limits<double>::infinity();
      for (std::size_t n : {1000u, 10000u, 100000u}) {
        const auto data = generate_offline_data(f.mdp, loggers, n, 5);
        const double err = max_gap_on(fqe_q(data, f.targets[0]), exact.q, cells);
        tally.expect(err <= previous, f.name + " n=" + std::to_string(n) + ": error " + num(err) +
                                          " > " + num(previous));
        previous = err;
      }
    }
    finish(r, tally);
  });
}

CheckResult check_optimality(FormulaFault fault) {
  return timed("optimality", "grid_search", [&](CheckResult& r) {
    Tally tally;
    std::vector<MicroFixture> cases;
    for (auto& f : build_micro_suite()) {
      if (f.mdp.num_actions() <= 3) cases.push_back(std::move(f));
    }
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      auto mdp = random_micro_mdp(700 + seed);
      auto targets = build_policy_set(mdp, {3, BasePolicy::random_softmax, 0.5, 800 + seed});
      cases.push_back({"random" + std::to_string(seed), std::move(mdp), std::move(targets)});
    }
    for (const auto& f : cases) {
      const auto tables = tables_for(f.mdp, f.targets, unchecked(fault));
      const std::span<const ValueTables<double>> span(tables);
      const auto mu = mu_hat_rl(f.targets, span).policy;
      for (Index t = 0; t < f.mdp.horizon(); ++t) {
        for (Index s = 0; s < f.mdp.num_states(); ++s) {
          const double at_mu = behavior_objective(f.targets, span, t, s, mu.at(t).row(s));
          const auto best = oracle::minimize_on_simplex(
              f.mdp.num_actions(),
              [&](const Eigen::VectorXd& x) { return behavior_objective(f.targets, span, t, s, x); });
          tally.expect(best.value >= at_mu - kOptimalitySlack,
                       f.name + " t=" + std::to_string(t) + " s=" + std::to_string(s) +
                           ": grid " + num(best.value) + " < mu_hat " + num(at_mu));
        }
      }
    }
    finish(r, tally);
  });
}

CheckResult check_lemma_conditions() {
  return timed("conditions", "lemma_conditions", [&](CheckResult& r) {
    Tally tally;
    SplitMix64 rng(2024);
    std::size_t certified = 0;
    auto draw = [&](Index n) {
      Eigen::VectorXd x(n);
      for (Index i = 0; i < n; ++i) x(i) = -std::log1p(-rng.uniform());
      return Eigen::VectorXd(x / x.sum());
    };
    for (int trial = 0; trial < 100; ++trial) {
      BanditInstance<double> b;
      b.num_actions = 2 + static_cast<Index>(rng() % 3);
      b.payoff = Eigen::VectorXd(b.num_actions);
      for (Index a = 0; a < b.num_actions; ++a) b.payoff(a) = rng.uniform() * 3 - 0.5;
      const std::size_t K = 2 + static_cast<std::size_t>(rng() % 3);
      const Eigen::VectorXd base = draw(b.num_actions);
      const double eps = rng.uniform() * 0.3;
      for (std::size_t k = 0; k < K; ++k) b.targets.push_back((1 - eps) * base + eps * draw(b.num_actions));
      const auto report = similarity_report_bandit(b);
      for (std::size_t k = 0; k < K; ++k) {
        const double frac = 1.0 / static_cast<double>(K);
        if (report.condition_lemma4[k]) {
          ++certified;
          tally.expect(report.variance_mu_star[k] <= report.variance_onpolicy[k] + kOracleTolerance,
                       "bandit " + std::to_string(trial) + " k=" + std::to_string(k));
        }
        if (report.condition_lemma3[k]) {
          tally.expect(frac * report.variance_mu_star[k] <= report.variance_onpolicy[k] + kOracleTolerance,
                       "bandit " + std::to_string(trial) + " k=" + std::to_string(k) + " (split)");
        }
      }
    }
    finish(r, tally);
    r.passed = r.passed && certified > 0;
    r.detail += "; " + std::to_string(certified) + " certified targets";
  });
}

CheckResult check_theorem_conditions(FormulaFault fault) {
  return timed("conditions", "theorem_conditions", [&](CheckResult& r) {
    Tally tally;
    std::size_t certified = 0, cells = 0;
    DpOptions options;
    options.fault = fault;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const double eps = std::vector<double>{0.0, 0.02, 0.1, 0.4}[seed % 4];
      const auto mdp = random_tabular_mdp(3, 2 + static_cast<Index>(seed % 2), 3, 1000 + seed, -0.5, 1.0);
      const auto targets = build_policy_set(mdp, {2, BasePolicy::random_softmax, eps, 1001 + seed});
      const auto tables = tables_for(mdp, targets, options);
      const std::span<const ValueTables<double>> span(tables);
      const auto mu = mu_hat_rl(targets, span).policy;
      const auto report = similarity_report_rl(mdp, targets, span, mu);
      for (std::size_t k = 0; k < targets.size(); ++k) {
        const auto v_mu = compute_pdis_variance(mdp, targets[k], tables[k], mu, fault);
        const auto v_on = compute_onpolicy_variance(targets[k], tables[k].q_hat, tables[k].v);
        for (std::size_t t = 0; t < v_mu.size(); ++t) {
          for (Index s = 0; s < mdp.num_states(); ++s) {
            ++cells;
            const std::string where = "instance " + std::to_string(seed) + " k=" + std::to_string(k) +
                                      " t=" + std::to_string(t) + " s=" + std::to_string(s);
            if (report.condition_thm4[k][t](s)) {
              ++certified;
              tally.expect(v_mu[t](s) <= v_on[t](s) + kOracleTolerance, where);
            }
            if (report.condition_thm3[k][t](s)) {
              tally.expect(report.sample_fraction[k] * v_mu[t](s) <= v_on[t](s) + kOracleTolerance,
                           where + " (split)");
            }
          }
        }
      }
    }
    finish(r, tally);
    r.passed = r.passed && certified > 0;
    r.detail += "; " + std::to_string(certified) + "/" + std::to_string(cells) + " cells certified";
  });
}

CheckResult check_identical_policies(FormulaFault fault) {
  return timed("conditions", "identical_policies", [&](CheckResult& r) {
    Tally tally;
    DpOptions options;
    options.fault = fault;
    std::vector<MDP> mdps{build_gridworld({.m = 3, .reward_seed = 1})};
    for (std::uint64_t seed = 0; seed < 5; ++seed) mdps.push_back(random_micro_mdp(1200 + seed));
    std::uint64_t seed = 0;
    for (const auto& mdp : mdps) {
      for (std::size_t K : {1u, 2u, 5u, 10u}) {
        const auto targets = build_policy_set(mdp, {K, BasePolicy::random_softmax, 0.0, ++seed});
        const auto tables = tables_for(mdp, targets, options);
        const std::span<const ValueTables<double>> span(tables);
        const auto mu = mu_hat_rl(targets, span).policy;
        const auto report = similarity_report_rl(mdp, targets, span, mu);
        tally.expect(report.all_thm4(), "K=" + std::to_string(K) + ": condition fails somewhere");
        for (std::size_t k = 0; k < K; ++k) {
          const auto v_mu = compute_pdis_variance(mdp, targets[k], tables[k], mu, fault);
          const auto v_on = compute_onpolicy_variance(targets[k], tables[k].q_hat, tables[k].v);
          for (std::size_t t = 0; t < v_mu.size(); ++t) {
            tally.expect(((v_mu[t] - v_on[t]).array() <= kOracleTolerance).all(),
                         "K=" + std::to_string(K) + " t=" + std::to_string(t) + ": variance not reduced");
          }
        }
      }
    }
    finish(r, tally);
  });
}

VerifyReport run_verify(Suite suite, FormulaFault fault) {
  VerifyReport report;
  if (suite == Suite::oracles || suite == Suite::all) {
    report.checks.push_back(check_unbiasedness(fault));
    report.checks.push_back(check_value_tables(fault));
    report.checks.push_back(check_pdis_variance(fault));
    report.checks.push_back(check_q_hat_identity(fault));
    report.checks.push_back(check_fqe_exactness(fault));
    report.checks.push_back(check_fqe_ladder());
  }
  if (suite == Suite::optimality || suite == Suite::all) {
    report.checks.push_back(check_optimality(fault));
  }
  if (suite == Suite::conditions || suite == Suite::all) {
    report.checks.push_back(check_lemma_conditions());
    report.checks.push_back(check_theorem_conditions(fault));
    report.checks.push_back(check_identical_policies(fault));
  }
  return report;
}

}  // namespace mpe::harness
