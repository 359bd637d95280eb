// Group-relative policy optimization objective.
#pragma once

#include <span>
#include <string>
#include <vector>

#include "stagerl/corpus.hpp"
#include "stagerl/toy_policy.hpp"

namespace stagerl {

struct GrpoConfig {
  int group_size = 16;
  double learning_rate = 1e-6;
  double kl_coef = 0.001;
  double entropy_coef = 0.001;
  int batch_size = 128;
  double advantage_epsilon = 1e-6;
  bool exclude_truncated_from_loss = false;
  // Average the objective over tokens instead of rollouts.
  bool per_token_average = false;

  bool operator==(const GrpoConfig&) const = default;
};

void validate(const GrpoConfig& cfg);

struct RolloutGroup {
  std::string prompt_id;
  std::vector<TokenId> prompt;
  std::vector<Rollout> rollouts;  // token_ids required
  std::vector<double> rewards;
  std::vector<double> advantages;
  std::vector<bool> loss_mask;
};

/// a_i = (r_i - mean) / (popstd + eps), or all zeros when popstd is 0.
/// Throws std::invalid_argument for fewer than two rewards.
std::vector<double> group_advantages(std::span<const double> rewards, double eps);

/// Mean over tokens of exp(ref - pol) - (ref - pol) - 1; 0 for empty input.
double kl_estimate(std::span<const double> policy_logprobs, std::span<const double> ref_logprobs);

/// -sum p log p of a log-distribution.
double entropy_of(std::span<const double> logprobs);

/// Builds a group: loss_mask is false for truncated rollouts when the config
/// excludes them, and advantages are computed over the unmasked rollouts
/// only (masked rollouts get 0; fewer than two unmasked gives all zeros), so
/// masked rewards cannot leak into the update.
RolloutGroup make_group(std::string prompt_id, std::vector<TokenId> prompt, std::vector<Rollout> rollouts,
                        std::vector<double> rewards, const GrpoConfig& cfg);

struct LossTerms {
  double loss = 0;
  double policy_term = 0;   // -(1/N) sum a_i sum_t log pi
  double kl_term = 0;       // kl_coef * mean KL
  double entropy_term = 0;  // entropy_coef * mean entropy (subtracted in loss)
  int active_rollouts = 0;
  long active_tokens = 0;
};

struct LossAndGrad {
  LossTerms terms;
  PolicyParams grad;
};

/// loss = policy_term + kl_term - entropy_term over the unmasked rollouts,
/// and its exact gradient. Masked rollouts are never evaluated. With no
/// unmasked rollouts the loss is 0 and the gradient zero.
LossAndGrad grpo_loss_and_grad(const PolicyParams& params, const PolicyParams& ref_params,
                               std::span<const RolloutGroup> groups, const GrpoConfig& cfg);

/// Loss only (same arithmetic as grpo_loss_and_grad), for finite differences.
LossTerms grpo_loss(const PolicyParams& params, const PolicyParams& ref_params, std::span<const RolloutGroup> groups,
                    const GrpoConfig& cfg);

}  // namespace stagerl
