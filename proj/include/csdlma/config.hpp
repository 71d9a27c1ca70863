#pragma once

#include "csdlma/agent.hpp"
#include "csdlma/protocols.hpp"
#include "csdlma/trainer.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace csdlma {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NodeSpec {
  std::string name;
  bool dlma = false;       // learning node; `legacy` unused when set
  LegacyConfig legacy;
  bool subject = false;    // the node a model-aware benchmark would replace
};

struct EpsilonConfig {
  double initial = 0.1;
  double decay = 0.995;
  double floor = 0.005;
};

struct AgentConfig {
  TrainerConfig trainer;
  EpsilonConfig epsilon;
};

struct ExperimentConfig {
  std::vector<NodeSpec> nodes;
  AgentConfig agent;
  std::uint64_t slots = 100000;
  std::uint64_t seed = 1;
  int seeds = 1;
  std::size_t window = 1000;
  std::uint64_t checkpoint_every = 0;  // 0: final checkpoint only
  bool dump_replay = false;

  /// Index of the subject node, if any.
  std::optional<std::size_t> subject() const;
};

/// Validates and fills Table-style defaults (M = 40, gamma = 0.9, buffer
/// 500, minibatch 32, target sync 200, epsilon 0.1 -> 0.005 at 0.995).
/// Errors name the offending field, e.g. "nodes[1].q".
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const ExperimentConfig& cfg);

}  // namespace csdlma
