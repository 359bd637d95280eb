// Experiment manifest shared by the CLI subcommands.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stagerl/code_judge.hpp"
#include "stagerl/curriculum.hpp"
#include "stagerl/eval_harness.hpp"
#include "stagerl/grpo.hpp"

namespace stagerl {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PipelinePaths {
  std::string corpus;
  std::string rollouts;
  std::string scores;
  std::string buckets;
  std::string checkpoints;
  std::string reports;

  bool operator==(const PipelinePaths&) const = default;
};

struct MixSpec {
  std::string name;
  std::string path;  // problems file
  double weight = 1.0;

  bool operator==(const MixSpec&) const = default;
};

// StageConfig with its pools given as files.
struct StageSpec {
  std::string name = "stage";
  std::vector<MixSpec> mix;
  int max_rollout_len = 16;
  bool entropy_enabled = true;
  bool exclude_truncated_from_loss = false;
  int steps_max = 100;
  std::optional<PlateauConfig> plateau;

  bool operator==(const StageSpec&) const = default;
};

struct TrainerSpec {
  std::string eval_problems;  // empty: no periodic eval
  int eval_every = 10;
  std::optional<int> total_steps;
  double temperature = 1.0;
  double top_p = 1.0;

  bool operator==(const TrainerSpec&) const = default;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  PipelinePaths paths;
  GrpoConfig grpo;
  std::vector<StageSpec> stages;
  EvalConfig eval;
  JudgeConfig judge;
  TrainerSpec trainer;

  bool operator==(const PipelineConfig&) const = default;
};

/// Checks every numeric setting; paths are checked by the commands that use
/// them. Throws ConfigError.
void validate(const PipelineConfig& cfg);

void to_json(nlohmann::json& j, const GrpoConfig& c);
void from_json(const nlohmann::json& j, GrpoConfig& c);
void to_json(nlohmann::json& j, const JudgeConfig& c);
void from_json(const nlohmann::json& j, JudgeConfig& c);
void to_json(nlohmann::json& j, const PlateauConfig& c);
void from_json(const nlohmann::json& j, PlateauConfig& c);
void to_json(nlohmann::json& j, const StageSpec& s);
void from_json(const nlohmann::json& j, StageSpec& s);
void to_json(nlohmann::json& j, const PipelineConfig& c);
void from_json(const nlohmann::json& j, PipelineConfig& c);

/// Parses and validates a config file. Missing sections keep their defaults;
/// unknown keys are rejected. Paths are kept exactly as written.
PipelineConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const PipelineConfig& cfg);

/// Rewrites every non-empty relative path as base / path.
void resolve_paths(PipelineConfig& cfg, const std::filesystem::path& base);

/// Loads each pool file of a stage.
StageConfig materialize(const StageSpec& spec);

}  // namespace stagerl
