#include "mpe/harness/commands.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "mpe/coverage.hpp"
#include "mpe/harness/compare.hpp"
#include "mpe/harness/experiment.hpp"
#include "mpe/harness/io.hpp"

namespace mpe::harness {

namespace {

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json bool_tables(const std::vector<std::vector<BoolVector>>& per_k) {
  json out = json::array();
  for (const auto& per_t : per_k) {
    json tj = json::array();
    for (const auto& b : per_t) {
      json row = json::array();
      for (Index s = 0; s < b.size(); ++s) row.push_back(static_cast<bool>(b(s)));
      tj.push_back(std::move(row));
    }
    out.push_back(std::move(tj));
  }
  return out;
}

json similarity_json(const RlSimilarityReport& report) {
  json eta_min = json::array(), eta_max = json::array(), eta = json::array(), delta = json::array();
  for (std::size_t t = 0; t < report.eta_min.size(); ++t) {
    eta_min.push_back(number_or_null(report.eta_min[t]));
    eta_max.push_back(number_or_null(report.eta_max[t]));
  }
  for (const auto& per_t : report.eta) {
    json tj = json::array();
    for (const auto& m : per_t) {
      json sj = json::array();
      for (Index s = 0; s < m.rows(); ++s) {
        json row = json::array();
        for (Index a = 0; a < m.cols(); ++a) row.push_back(number_or_null(m(s, a)));
        sj.push_back(std::move(row));
      }
      tj.push_back(std::move(sj));
    }
    eta.push_back(std::move(tj));
  }
  for (const auto& per_t : report.delta) {
    json tj = json::array();
    for (const auto& d : per_t) {
      json row = json::array();
      for (Index s = 0; s < d.size(); ++s) row.push_back(number_or_null(d(s)));
      tj.push_back(std::move(row));
    }
    delta.push_back(std::move(tj));
  }
  return {{"eta_min", std::move(eta_min)},
          {"eta_max", std::move(eta_max)},
          {"eta", std::move(eta)},
          {"delta", std::move(delta)},
          {"sample_fraction", report.sample_fraction},
          {"condition_thm3", bool_tables(report.condition_thm3)},
          {"condition_thm4", bool_tables(report.condition_thm4)},
          {"condition_thm3_local", bool_tables(report.condition_thm3_local)},
          {"condition_thm4_local", bool_tables(report.condition_thm4_local)},
          {"all_thm4", report.all_thm4()}};
}

}  // namespace

int cmd_synthesize(const ExperimentConfig& config, bool strict_coverage, std::ostream& out,
                   std::ostream& err) {
  const auto inst = build_group(config, 0);
  const auto& problem = inst.problem;
  const auto& behavior = inst.synthesis.behavior;

  json gaps = json::array();
  for (std::size_t k = 0; k < inst.synthesis.tables.size(); ++k) {
    for (const auto& c : inst.synthesis.tables[k].coverage_gaps) {
      gaps.push_back({{"k", k}, {"t", c.t}, {"s", c.s}, {"a", c.a}});
    }
  }
  const auto coverage = coverage_check(behavior.policy, problem.targets, problem.table_span());
  json coverage_json = {{"lambda_minus", coverage.lambda_minus},
                        {"lambda", coverage.lambda},
                        {"lambda_hat", coverage.lambda_hat},
                        {"fqe_gaps", gaps},
                        {"num_fqe_gaps", gaps.size()}};

  // Conditions are evaluated on the exact tables; the behavior is the offline estimate.
  const auto report = similarity_report_rl(problem.mdp, problem.targets, problem.table_span(),
                                           behavior.policy);
  json similarity = similarity_json(report);
  similarity["coverage"] = coverage_json;
  json truth = json::array();
  for (std::size_t k = 0; k < problem.targets.size(); ++k) truth.push_back(problem.truth(k));
  similarity["performance"] = truth;

  json behavior_json = to_json(behavior.policy, behavior.provenance);
  behavior_json["dataset"] = inst.data.metadata;

  const auto& dir = config.out_dir;
  write_json_file(dir / "behavior.json", behavior_json);
  write_json_file(dir / "similarity_report.json", similarity);
  write_json_file(dir / "targets.json", to_json(problem.targets));
  write_json_file(dir / "mdp.json", to_json(problem.mdp));
  {
    std::filesystem::create_directories(dir);
    std::ofstream csv(dir / "dataset.csv");
    write_dataset_csv(csv, inst.data);
  }
  write_json_file(dir / "dataset.json", dataset_sidecar(inst.data));

  out << "behavior written to " << (dir / "behavior.json").string() << "\n"
      << "theorem-4 condition holds everywhere: " << (report.all_thm4() ? "yes" : "no") << "\n"
      << "FQE coverage gaps: " << gaps.size() << "\n";
  const bool fatal = !gaps.empty() || !coverage.lambda_hat;
  if (fatal) {
    err << (strict_coverage ? "error" : "warning") << ": under-covered offline data ("
        << gaps.size() << " unlogged cells with positive target probability"
        << (coverage.lambda_hat ? "" : ", behavior outside Lambda_hat") << ")\n";
    for (const auto& g : gaps) {
      err << "  gap k=" << g["k"] << " t=" << g["t"] << " s=" << g["s"] << " a=" << g["a"] << "\n";
    }
    if (strict_coverage) return kExitCoverage;
  }
  return kExitOk;
}

int cmd_compare(const ExperimentConfig& config, std::ostream& out) {
  const auto bundle = run_compare(config);
  write_bundle(bundle, config.out_dir, config.write_reports);
  out << render_tables(config.out_dir);
  return kExitOk;
}

int cmd_verify(Suite suite, FormulaFault fault, const std::filesystem::path* out_dir,
               std::ostream& out) {
  const auto report = run_verify(suite, fault);
  out << report.render();
  if (out_dir) {
    json checks = json::array();
    for (const auto& c : report.checks) {
      checks.push_back({{"suite", c.suite},
                        {"name", c.name},
                        {"passed", c.passed},
                        {"detail", c.detail},
                        {"seconds", c.seconds}});
    }
    write_json_file(*out_dir / "verify_report.json", {{"passed", report.passed()}, {"checks", checks}});
  }
  return report.passed() ? kExitOk : kExitVerification;
}

int cmd_table(const std::filesystem::path& bundle_dir, std::ostream& out, std::ostream& err) {
  try {
    out << render_tables(bundle_dir);
  } catch (const InvalidInputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_gridworld_gen(const ExperimentConfig& config, std::ostream& out) {
  if (config.env.kind != EnvKind::gridworld) throw ConfigError("gridworld-gen needs env.kind = gridworld");
  const auto path = config.out_dir / "mdp.json";
  write_json_file(path, to_json(build_gridworld(config.env.gridworld)));
  out << "wrote " << path.string() << "\n";
  return kExitOk;
}

}  // namespace mpe::harness
