// Small autoregressive policy: mean-pooled token embeddings of the context
// feed one tanh hidden layer and a linear output layer over the vocabulary.
//
// Parameters live in one flat vector, laid out as
//   embedding  vocab x embed   (row per token)
//   w_hidden   embed x hidden
//   b_hidden   hidden
//   w_out      hidden x vocab
//   b_out      vocab
// so gradients, updates and checkpoints all work on the same buffer.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stagerl/corpus.hpp"
#include "stagerl/rng.hpp"

namespace stagerl {

struct PolicyShape {
  int vocab = 0;
  int embed = 0;
  int hidden = 0;

  std::size_t param_count() const;
  bool operator==(const PolicyShape&) const = default;
};

class PolicyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PolicyParams {
 public:
  PolicyParams() = default;
  explicit PolicyParams(PolicyShape shape);  // all zeros

  /// Entries drawn from N(0, scale^2).
  static PolicyParams random(PolicyShape shape, std::uint64_t seed, double scale = 0.1);

  const PolicyShape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double& embedding(int token, int k) { return values_[emb_off() + token * shape_.embed + k]; }
  double& w_hidden(int k, int j) { return values_[wh_off() + k * shape_.hidden + j]; }
  double& b_hidden(int j) { return values_[bh_off() + j]; }
  double& w_out(int j, int v) { return values_[wo_off() + j * shape_.vocab + v]; }
  double& b_out(int v) { return values_[bo_off() + v]; }
  double embedding(int token, int k) const { return values_[emb_off() + token * shape_.embed + k]; }
  double w_hidden(int k, int j) const { return values_[wh_off() + k * shape_.hidden + j]; }
  double b_hidden(int j) const { return values_[bh_off() + j]; }
  double w_out(int j, int v) const { return values_[wo_off() + j * shape_.vocab + v]; }
  double b_out(int v) const { return values_[bo_off() + v]; }

  /// this += alpha * other. Shapes must match.
  void axpy(double alpha, const PolicyParams& other);
  void set_zero();
  bool all_finite() const;

  bool operator==(const PolicyParams&) const = default;

 private:
  std::size_t emb_off() const { return 0; }
  std::size_t wh_off() const { return emb_off() + std::size_t(shape_.vocab) * shape_.embed; }
  std::size_t bh_off() const { return wh_off() + std::size_t(shape_.embed) * shape_.hidden; }
  std::size_t wo_off() const { return bh_off() + shape_.hidden; }
  std::size_t bo_off() const { return wo_off() + std::size_t(shape_.hidden) * shape_.vocab; }

  PolicyShape shape_;
  std::vector<double> values_;
};

struct SamplerConfig {
  double temperature = 1.0;
  double top_p = 1.0;
  int max_len = 16;
  std::uint64_t seed = 0;
  TokenId end_token = 0;
};

void validate(const SamplerConfig& cfg);

/// Log-softmax of the output for `context` (prompt followed by the tokens
/// generated so far). Throws PolicyError on out-of-range tokens.
std::vector<double> logprobs(const PolicyParams& params, std::span<const TokenId> context);

/// Indices of the nucleus of `probs`: the shortest prefix of tokens sorted
/// by descending probability (ties by index) whose mass reaches top_p.
std::vector<int> nucleus(std::span<const double> probs, double top_p);

/// Samples a continuation of `prompt`. The rollout holds the generated
/// tokens (end token included when produced) and, per token, its log
/// probability under the untempered, untruncated distribution. `text` is
/// left empty. Uses an engine seeded with cfg.seed.
Rollout sample(const PolicyParams& params, const SamplerConfig& cfg, std::span<const TokenId> prompt);

/// Per-position log-probability vectors for the tokens of a rollout:
/// row t is logprobs(prompt ++ tokens[0..t)).
std::vector<std::vector<double>> sequence_logprobs(const PolicyParams& params, std::span<const TokenId> prompt,
                                                   std::span<const TokenId> tokens);

/// Backpropagates per-position output gradients. `dlogits(t, logp, g)` is
/// called once per position with the position's log-probabilities and must
/// fill g (size vocab, zero on entry) with dL/dlogits; the resulting
/// parameter gradient is added into `grad`.
using LogitGradFn = std::function<void(std::size_t t, std::span<const double> logp, std::span<double> g)>;
void accumulate_sequence_grad(const PolicyParams& params, std::span<const TokenId> prompt,
                              std::span<const TokenId> tokens, const LogitGradFn& dlogits, PolicyParams& grad);

/// Gradient of sum_t log pi(tokens[t] | prompt ++ tokens[0..t)).
PolicyParams grad_logprob(const PolicyParams& params, std::span<const TokenId> prompt,
                          std::span<const TokenId> tokens);

/// Sum of the per-token log-probabilities of `tokens` after `prompt`.
double sequence_logprob(const PolicyParams& params, std::span<const TokenId> prompt,
                        std::span<const TokenId> tokens);

struct Checkpoint {
  PolicyParams params;
  std::vector<std::string> vocab;  // may be empty
};

/// Text format:
///   stagerl-policy 1
///   shape <vocab> <embed> <hidden>
///   vocab <n>            followed by n JSON string literals, one per line
///   values <count>       followed by count numbers, one per line
/// Numbers use shortest round-trip formatting, so save/load is exact.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace stagerl
