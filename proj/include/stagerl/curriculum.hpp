// Staged GRPO training: batch composition, plateau detection and the
// training loop.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stagerl/corpus.hpp"
#include "stagerl/eval_harness.hpp"
#include "stagerl/grpo.hpp"
#include "stagerl/reward.hpp"
#include "stagerl/rng.hpp"
#include "stagerl/toy_policy.hpp"
#include "stagerl/vocabulary.hpp"

namespace stagerl {

struct MixComponent {
  std::string name;
  std::vector<Problem> problems;
  double weight = 1.0;
};

/// Largest-remainder split of `total` by `weights`; remainder ties are
/// broken by `rng`. When total >= number of weights, every weight gets at
/// least one slot (taken from the largest share).
std::vector<int> apportion(std::span<const double> weights, int total, Engine& rng);

/// Draws batches from weighted pools. Each pool is consumed in seeded
/// random order without replacement and reshuffled when exhausted. Batch
/// counts are apportioned per batch, but the rounding left over by earlier
/// batches decides who gets the leftover slots, so long-run shares track
/// the weights even when every batch rounds the same way.
class BatchComposer {
 public:
  BatchComposer(std::vector<MixComponent> mix, std::uint64_t seed);

  /// Components in mix order, each block in draw order.
  std::vector<Problem> next(int batch_size);

  /// Components drawn for each slot of the last batch.
  const std::vector<int>& last_components() const { return last_components_; }

 private:
  struct Pool {
    MixComponent component;
    std::vector<std::size_t> order;
    std::size_t cursor = 0;
    std::uint64_t epoch = 0;
  };
  void reshuffle(std::size_t i);

  std::vector<Pool> pools_;
  std::uint64_t seed_;
  std::uint64_t batches_ = 0;
  std::vector<double> carry_;  // exact minus drawn, summed over batches
  std::vector<int> last_components_;
};

/// One batch from a fresh composer.
std::vector<Problem> compose_batch(std::vector<MixComponent> mix, int batch_size, std::uint64_t seed);

struct PlateauConfig {
  int window = 10;
  double min_delta = 0.005;
  int patience = 3;

  bool operator==(const PlateauConfig&) const = default;
};

void validate(const PlateauConfig& cfg);

/// Window means m_i = mean(history[i .. i+window)). True iff there is at
/// least one window mean before the last `patience` ones and
/// max(last patience) - max(earlier) < min_delta.
bool detect_plateau(std::span<const double> history, const PlateauConfig& cfg);

struct StageConfig {
  std::string name = "stage";
  std::vector<MixComponent> mix;
  int max_rollout_len = 16;
  bool entropy_enabled = true;
  bool exclude_truncated_from_loss = false;
  int steps_max = 100;
  std::optional<PlateauConfig> plateau;  // checked on eval scores
};

/// The second-stage preset: longer rollouts, no entropy bonus, truncated
/// rollouts excluded from the loss.
StageConfig long_context_preset(StageConfig base, int max_rollout_len);

void validate(const StageConfig& stage);

struct StepRecord {
  int step = 0;  // global, starting at 1
  int stage = 0;
  std::string stage_name;
  double mean_reward = 0;
  double mean_length = 0;
  double truncation_fraction = 0;
  double loss = 0;
  double kl_term = 0;
  double entropy_term = 0;
  int reward_failures = 0;
  std::optional<double> eval_score;

  bool operator==(const StepRecord&) const = default;
};

struct StageTransition {
  int step = 0;  // last step of the stage being left
  int from_stage = 0;
  int to_stage = 0;
  std::string reason;  // "plateau" or "steps_max"

  bool operator==(const StageTransition&) const = default;
};

struct TrainLog {
  // Eval score before any update (step 0).
  std::optional<double> initial_eval;
  std::vector<StepRecord> steps;
  std::vector<StageTransition> transitions;

  bool operator==(const TrainLog&) const = default;
};

struct TrainerOptions {
  GrpoConfig grpo;
  SamplerConfig sampler{1.0, 1.0, 16, 0, 0};  // max_len comes from the stage
  std::uint64_t seed = 0;
  // Periodic evaluation; its scores drive plateau detection.
  std::vector<Problem> eval_problems;
  EvalConfig eval;
  int eval_every = 10;
  // When set, the last stage runs for whatever remains of this many steps.
  std::optional<int> total_steps;
  // Called after every step (for progress output).
  std::function<void(const StepRecord&)> on_step;
};

struct TrainResult {
  PolicyParams params;
  TrainLog log;
};

/// Runs one stage starting at global step `first_step` (0 for a fresh run).
TrainResult run_stage(const PolicyParams& params, const StageConfig& stage, int stage_index, int first_step,
                      const Vocabulary& vocab, Rewarder& rewarder, const TrainerOptions& opts);

/// Runs the stages in order, carrying parameters. The KL reference is the
/// parameter snapshot at the start of each stage. Each boundary is recorded
/// once in the log.
TrainResult run_staged(const PolicyParams& params, std::span<const StageConfig> stages, const Vocabulary& vocab,
                       Rewarder& rewarder, const TrainerOptions& opts);

void to_json(nlohmann::json& j, const StepRecord& r);
void from_json(const nlohmann::json& j, StepRecord& r);
void to_json(nlohmann::json& j, const StageTransition& t);
void from_json(const nlohmann::json& j, StageTransition& t);

/// One JSON object per line: {"type":"initial_eval"|"step"|"transition", ...}.
void write_train_log(const std::filesystem::path& path, const TrainLog& log);
TrainLog read_train_log(const std::filesystem::path& path);

}  // namespace stagerl
