#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "mpe/fqe.hpp"
#include "mpe/mdp.hpp"
#include "mpe/synthesis.hpp"

namespace mpe::harness {

using nlohmann::json;

json to_json(const MDP& mdp);
MDP mdp_from_json(const json& j);

json to_json(const PolicyD& policy, std::optional<Provenance> provenance = std::nullopt);
PolicyD policy_from_json(const json& j);

json to_json(const PolicySetD& targets);
PolicySetD policy_set_from_json(const json& j);

/// Metadata sidecar for a dataset CSV: dimensions, tuple count, description.
json dataset_sidecar(const OfflineDataset& data);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace mpe::harness
