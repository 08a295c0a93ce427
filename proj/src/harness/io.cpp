#include "mpe/harness/io.hpp"

#include <fstream>

namespace mpe::harness {

namespace {

template <typename Row>
json row_to_json(const Row& row) {
  json out = json::array();
  for (Index i = 0; i < row.size(); ++i) out.push_back(row(i));
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Index r = 0; r < m.rows(); ++r) out.push_back(row_to_json(m.row(r)));
  return out;
}

Eigen::MatrixXd matrix_from_json(const json& j, Index rows, Index cols, const char* what) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows) {
    throw DimensionError(std::string(what) + " has the wrong number of rows");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw DimensionError(std::string(what) + " has the wrong number of columns");
    }
    for (Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Index positive_field(const json& j, const char* name) {
  if (!j.contains(name)) throw InvalidInputError(std::string("missing field ") + name);
  const auto v = j.at(name).get<Index>();
  if (v <= 0) throw InvalidInputError(std::string(name) + " must be positive");
  return v;
}

}  // namespace

json to_json(const MDP& mdp) {
  const Index S = mdp.num_states(), A = mdp.num_actions();
  json transition = json::array();
  for (Index s = 0; s < S; ++s) {
    json per_action = json::array();
    for (Index a = 0; a < A; ++a) per_action.push_back(row_to_json(mdp.transition_row(s, a)));
    transition.push_back(std::move(per_action));
  }
  return {{"num_states", S},
          {"num_actions", A},
          {"horizon", mdp.horizon()},
          {"transition", std::move(transition)},
          {"reward", matrix_to_json(mdp.reward())},
          {"initial_dist", row_to_json(mdp.initial_dist())}};
}

MDP mdp_from_json(const json& j) {
  const Index S = positive_field(j, "num_states");
  const Index A = positive_field(j, "num_actions");
  const Index T = positive_field(j, "horizon");
  const auto& tj = j.at("transition");
  if (!tj.is_array() || static_cast<Index>(tj.size()) != S) {
    throw DimensionError("transition must have |S| entries");
  }
  Eigen::MatrixXd transition(S * A, S);
  for (Index s = 0; s < S; ++s) {
    transition.middleRows(s * A, A) = matrix_from_json(tj[static_cast<std::size_t>(s)], A, S, "transition[s]");
  }
  const Eigen::MatrixXd reward = matrix_from_json(j.at("reward"), S, A, "reward");
  const Eigen::VectorXd initial = matrix_from_json(json::array({j.at("initial_dist")}), 1, S,
                                                   "initial_dist").row(0).transpose();
  MDP mdp(S, A, T, transition, reward, initial);
  if (const auto problems = validate(mdp); !problems.empty()) {
    throw InvalidInputError("invalid MDP: " + detail::join(problems));
  }
  return mdp;
}

json to_json(const PolicyD& policy, std::optional<Provenance> provenance) {
  json probs = json::array();
  for (Index t = 0; t < policy.horizon(); ++t) probs.push_back(matrix_to_json(policy.at(t)));
  json out = {{"probs", std::move(probs)}};
  if (provenance) out["provenance"] = to_string(*provenance);
  return out;
}

PolicyD policy_from_json(const json& j) {
  const auto& pj = j.at("probs");
  if (!pj.is_array() || pj.empty() || !pj[0].is_array() || pj[0].empty()) {
    throw DimensionError("probs must be a non-empty [t][s][a] array");
  }
  const auto S = static_cast<Index>(pj[0].size());
  const auto A = static_cast<Index>(pj[0][0].size());
  StateActionTable<double> probs;
  for (const auto& m : pj) probs.push_back(matrix_from_json(m, S, A, "probs[t]"));
  PolicyD policy(std::move(probs));
  if (const auto problems = validate(policy); !problems.empty()) {
    throw InvalidInputError("invalid policy: " + detail::join(problems));
  }
  return policy;
}

json to_json(const PolicySetD& targets) {
  json out = json::array();
  for (const auto& pi : targets) out.push_back(to_json(pi));
  return {{"policies", std::move(out)}};
}

PolicySetD policy_set_from_json(const json& j) {
  std::vector<PolicyD> policies;
  for (const auto& p : j.at("policies")) policies.push_back(policy_from_json(p));
  return PolicySetD(std::move(policies));
}

json dataset_sidecar(const OfflineDataset& data) {
  return {{"num_states", data.num_states},
          {"num_actions", data.num_actions},
          {"horizon", data.horizon},
          {"num_tuples", data.tuples.size()},
          {"weighted", data.weighted()},
          {"metadata", data.metadata}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open " + path.string());
  return json::parse(in);
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot write " + path.string());
  out << text;
}

}  // namespace mpe::harness
