#include "stagerl/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stagerl {

void validate(const GrpoConfig& cfg) {
  auto nonneg = [](double v) { return std::isfinite(v) && v >= 0; };
  if (cfg.group_size < 2) throw std::invalid_argument("grpo: group_size must be >= 2");
  if (!(std::isfinite(cfg.learning_rate) && cfg.learning_rate > 0)) {
    throw std::invalid_argument("grpo: learning_rate must be positive");
  }
  if (!nonneg(cfg.kl_coef) || !nonneg(cfg.entropy_coef) || !nonneg(cfg.advantage_epsilon)) {
    throw std::invalid_argument("grpo: coefficients must be finite and non-negative");
  }
  if (cfg.batch_size < 1) throw std::invalid_argument("grpo: batch_size must be positive");
}

std::vector<double> group_advantages(std::span<const double> rewards, double eps) {
  if (rewards.size() < 2) throw std::invalid_argument("group_advantages: need at least two rewards");
  std::vector<double> a(rewards.size(), 0.0);
  // Checked exactly: a rounded mean can leave a tiny nonzero spread.
  if (std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards[0]; })) return a;
  const double n = static_cast<double>(rewards.size());
  double mean = 0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  if (sd == 0) return a;
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = (rewards[i] - mean) / (sd + eps);
  return a;
}

double kl_estimate(std::span<const double> pol, std::span<const double> ref) {
  if (pol.size() != ref.size()) throw std::invalid_argument("kl_estimate: length mismatch");
  if (pol.empty()) return 0;
  double sum = 0;
  for (std::size_t i = 0; i < pol.size(); ++i) {
    const double d = ref[i] - pol[i];
    sum += std::exp(d) - d - 1;
  }
  return sum / static_cast<double>(pol.size());
}

double entropy_of(std::span<const double> logprobs) {
  double h = 0;
  for (double lp : logprobs) {
    if (lp > -INFINITY) h -= std::exp(lp) * lp;
  }
  return h;
}

RolloutGroup make_group(std::string prompt_id, std::vector<TokenId> prompt, std::vector<Rollout> rollouts,
                        std::vector<double> rewards, const GrpoConfig& cfg) {
  if (rollouts.size() != rewards.size()) throw std::invalid_argument("make_group: rollouts/rewards size mismatch");
  if (rollouts.size() < 2) throw std::invalid_argument("make_group: need at least two rollouts");
  RolloutGroup g;
  g.prompt_id = std::move(prompt_id);
  g.prompt = std::move(prompt);
  g.loss_mask.resize(rollouts.size());
  std::vector<double> active_rewards;
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    g.loss_mask[i] = !(cfg.exclude_truncated_from_loss && rollouts[i].truncated);
    if (g.loss_mask[i]) active_rewards.push_back(rewards[i]);
  }
  g.advantages.assign(rollouts.size(), 0.0);
  if (active_rewards.size() >= 2) {
    const auto a = group_advantages(active_rewards, cfg.advantage_epsilon);
    for (std::size_t i = 0, k = 0; i < rollouts.size(); ++i) {
      if (g.loss_mask[i]) g.advantages[i] = a[k++];
    }
  }
  g.rollouts = std::move(rollouts);
  g.rewards = std::move(rewards);
  return g;
}

namespace {

void check_group(const RolloutGroup& g) {
  const std::size_t n = g.rollouts.size();
  if (g.rewards.size() != n || g.advantages.size() != n || g.loss_mask.size() != n) {
    throw std::invalid_argument("rollout group '" + g.prompt_id + "': list lengths differ");
  }
  for (const Rollout& r : g.rollouts) {
    if (!r.token_ids) throw std::invalid_argument("rollout group '" + g.prompt_id + "': rollout without token ids");
  }
}

// Shared by the loss-only and loss+gradient paths so both do identical
// floating-point work.
LossTerms run(const PolicyParams& params, const PolicyParams& ref_params, std::span<const RolloutGroup> groups,
              const GrpoConfig& cfg, PolicyParams* grad) {
  validate(cfg);
  LossTerms terms;
  for (const RolloutGroup& g : groups) {
    check_group(g);
    for (std::size_t i = 0; i < g.rollouts.size(); ++i) {
      if (!g.loss_mask[i]) continue;
      ++terms.active_rollouts;
      terms.active_tokens += static_cast<long>(g.rollouts[i].token_ids->size());
    }
  }
  if (terms.active_rollouts == 0) return terms;

  const bool use_kl = cfg.kl_coef > 0;
  const bool use_entropy = cfg.entropy_coef > 0;
  double pg = 0, kl = 0, ent = 0;
  for (const RolloutGroup& g : groups) {
    for (std::size_t i = 0; i < g.rollouts.size(); ++i) {
      if (!g.loss_mask[i]) continue;
      const std::vector<TokenId>& tokens = *g.rollouts[i].token_ids;
      const std::size_t T = tokens.size();
      if (T == 0) continue;
      // Weight of one token's contribution to each averaged term.
      const double w_pg = cfg.per_token_average ? 1.0 / static_cast<double>(terms.active_tokens)
                                                : 1.0 / terms.active_rollouts;
      const double w_tok = cfg.per_token_average ? w_pg : w_pg / static_cast<double>(T);
      const double a = g.advantages[i];

      std::vector<double> ref_lp;
      if (use_kl) {
        const auto ref_rows = sequence_logprobs(ref_params, g.prompt, tokens);
        ref_lp.resize(T);
        for (std::size_t t = 0; t < T; ++t) ref_lp[t] = ref_rows[t][tokens[t]];
      }
      auto per_position = [&](std::size_t t, std::span<const double> logp, std::span<double> gz) {
        const double lp = logp[tokens[t]];
        pg += -w_pg * a * lp;
        double c_onehot = -w_pg * a;  // coefficient of (onehot - p)
        if (use_kl) {
          const double d = ref_lp[t] - lp;
          kl += w_tok * (std::exp(d) - d - 1);
          c_onehot += cfg.kl_coef * w_tok * (1 - std::exp(d));
        }
        double h = 0;
        if (use_entropy) {
          h = entropy_of(logp);
          ent += w_tok * h;
        }
        if (!gz.empty()) {
          for (std::size_t v = 0; v < gz.size(); ++v) {
            const double p = std::exp(logp[v]);
            gz[v] = -c_onehot * p;
            // d(-coef * H)/dz_v = coef * p_v (log p_v + H)
            if (use_entropy) gz[v] += cfg.entropy_coef * w_tok * p * (logp[v] + h);
          }
          gz[tokens[t]] += c_onehot;
        }
      };
      if (grad) {
        accumulate_sequence_grad(params, g.prompt, tokens, per_position, *grad);
      } else {
        const auto rows = sequence_logprobs(params, g.prompt, tokens);
        for (std::size_t t = 0; t < T; ++t) per_position(t, rows[t], {});
      }
    }
  }
  terms.policy_term = pg;
  terms.kl_term = use_kl ? cfg.kl_coef * kl : 0.0;
  terms.entropy_term = use_entropy ? cfg.entropy_coef * ent : 0.0;
  terms.loss = terms.policy_term + terms.kl_term - terms.entropy_term;
  return terms;
}

}  // namespace

LossAndGrad grpo_loss_and_grad(const PolicyParams& params, const PolicyParams& ref_params,
                               std::span<const RolloutGroup> groups, const GrpoConfig& cfg) {
  LossAndGrad out{{}, PolicyParams(params.shape())};
  out.terms = run(params, ref_params, groups, cfg, &out.grad);
  return out;
}

LossTerms grpo_loss(const PolicyParams& params, const PolicyParams& ref_params, std::span<const RolloutGroup> groups,
                    const GrpoConfig& cfg) {
  return run(params, ref_params, groups, cfg, nullptr);
}

}  // namespace stagerl
