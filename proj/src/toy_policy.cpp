#include "stagerl/toy_policy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace stagerl {

std::size_t PolicyShape::param_count() const {
  const std::size_t v = vocab, d = embed, h = hidden;
  return v * d + d * h + h + h * v + v;
}

PolicyParams::PolicyParams(PolicyShape shape) : shape_(shape) {
  if (shape.vocab < 1 || shape.embed < 1 || shape.hidden < 1) throw PolicyError("policy shape must be positive");
  values_.assign(shape.param_count(), 0.0);
}

PolicyParams PolicyParams::random(PolicyShape shape, std::uint64_t seed, double scale) {
  PolicyParams p(shape);
  Engine rng(stream_seed(seed, {0x1417}));
  for (double& v : p.values_) v = scale * normal01(rng);
  return p;
}

void PolicyParams::axpy(double alpha, const PolicyParams& other) {
  if (other.shape_ != shape_) throw PolicyError("axpy: shape mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += alpha * other.values_[i];
}

void PolicyParams::set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

bool PolicyParams::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void validate(const SamplerConfig& cfg) {
  if (!(cfg.temperature > 0) || !std::isfinite(cfg.temperature)) throw PolicyError("temperature must be > 0");
  if (!(cfg.top_p > 0 && cfg.top_p <= 1)) throw PolicyError("top_p must be in (0, 1]");
  if (cfg.max_len < 1) throw PolicyError("max_len must be positive");
}

namespace {

// Forward state at one position, kept for the backward pass.
struct Position {
  std::vector<double> pooled;  // mean embedding of the context
  std::vector<double> hidden;  // tanh activations
  std::vector<double> logp;
  std::size_t context_len = 0;
};

void check_tokens(const PolicyShape& s, std::span<const TokenId> tokens) {
  for (TokenId t : tokens) {
    if (t < 0 || t >= s.vocab) throw PolicyError("token " + std::to_string(t) + " out of range");
  }
}

void log_softmax_inplace(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0;
  for (double v : z) sum += std::exp(v - m);
  const double lse = m + std::log(sum);
  for (double& v : z) v -= lse;
}

// Incrementally pooled forward pass: `sum` is the embedding sum of the
// context so far, `n` its length.
void forward(const PolicyParams& p, const std::vector<double>& sum, std::size_t n, Position& out) {
  const auto& s = p.shape();
  out.context_len = n;
  out.pooled.assign(s.embed, 0.0);
  if (n > 0) {
    for (int k = 0; k < s.embed; ++k) out.pooled[k] = sum[k] / static_cast<double>(n);
  }
  out.hidden.resize(s.hidden);
  for (int j = 0; j < s.hidden; ++j) {
    double a = p.b_hidden(j);
    for (int k = 0; k < s.embed; ++k) a += out.pooled[k] * p.w_hidden(k, j);
    out.hidden[j] = std::tanh(a);
  }
  out.logp.resize(s.vocab);
  for (int v = 0; v < s.vocab; ++v) out.logp[v] = p.b_out(v);
  for (int j = 0; j < s.hidden; ++j) {
    const double h = out.hidden[j];
    for (int v = 0; v < s.vocab; ++v) out.logp[v] += h * p.w_out(j, v);
  }
  log_softmax_inplace(out.logp);
}

void add_embedding(const PolicyParams& p, TokenId tok, std::vector<double>& sum) {
  for (int k = 0; k < p.shape().embed; ++k) sum[k] += p.embedding(tok, k);
}

std::vector<Position> forward_sequence(const PolicyParams& params, std::span<const TokenId> prompt,
                                       std::span<const TokenId> tokens) {
  check_tokens(params.shape(), prompt);
  check_tokens(params.shape(), tokens);
  std::vector<double> sum(params.shape().embed, 0.0);
  for (TokenId t : prompt) add_embedding(params, t, sum);
  std::vector<Position> out(tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    forward(params, sum, prompt.size() + t, out[t]);
    add_embedding(params, tokens[t], sum);
  }
  return out;
}

}  // namespace

std::vector<double> logprobs(const PolicyParams& params, std::span<const TokenId> context) {
  check_tokens(params.shape(), context);
  std::vector<double> sum(params.shape().embed, 0.0);
  for (TokenId t : context) add_embedding(params, t, sum);
  Position pos;
  forward(params, sum, context.size(), pos);
  return pos.logp;
}

std::vector<int> nucleus(std::span<const double> probs, double top_p) {
  std::vector<int> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return probs[a] > probs[b]; });
  if (top_p >= 1.0) return order;
  double mass = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    mass += probs[order[i]];
    if (mass >= top_p) {
      order.resize(i + 1);
      break;
    }
  }
  return order;
}

Rollout sample(const PolicyParams& params, const SamplerConfig& cfg, std::span<const TokenId> prompt) {
  validate(cfg);
  check_tokens(params.shape(), prompt);
  const int V = params.shape().vocab;
  Engine rng(cfg.seed);
  Rollout r;
  r.token_ids.emplace();
  r.logprobs.emplace();
  std::vector<double> sum(params.shape().embed, 0.0);
  for (TokenId t : prompt) add_embedding(params, t, sum);
  Position pos;
  std::vector<double> probs(V);
  bool ended = false;
  for (int step = 0; step < cfg.max_len; ++step) {
    forward(params, sum, prompt.size() + step, pos);
    // Tempered distribution, computed from the normalized log-probs.
    double m = *std::max_element(pos.logp.begin(), pos.logp.end());
    double total = 0;
    for (int v = 0; v < V; ++v) total += probs[v] = std::exp((pos.logp[v] - m) / cfg.temperature);
    for (double& q : probs) q /= total;
    const std::vector<int> keep = nucleus(probs, cfg.top_p);
    double mass = 0;
    for (int v : keep) mass += probs[v];
    double u = u01(rng) * mass;
    int chosen = keep.back();
    for (int v : keep) {
      if (u < probs[v]) {
        chosen = v;
        break;
      }
      u -= probs[v];
    }
    r.token_ids->push_back(chosen);
    r.logprobs->push_back(pos.logp[chosen]);
    add_embedding(params, chosen, sum);
    if (chosen == cfg.end_token) {
      ended = true;
      break;
    }
  }
  r.truncated = !ended;
  return r;
}

std::vector<std::vector<double>> sequence_logprobs(const PolicyParams& params, std::span<const TokenId> prompt,
                                                   std::span<const TokenId> tokens) {
  auto positions = forward_sequence(params, prompt, tokens);
  std::vector<std::vector<double>> out;
  out.reserve(positions.size());
  for (auto& p : positions) out.push_back(std::move(p.logp));
  return out;
}

void accumulate_sequence_grad(const PolicyParams& params, std::span<const TokenId> prompt,
                              std::span<const TokenId> tokens, const LogitGradFn& dlogits, PolicyParams& grad) {
  if (grad.shape() != params.shape()) throw PolicyError("gradient shape mismatch");
  const auto& s = params.shape();
  const auto positions = forward_sequence(params, prompt, tokens);
  const std::size_t T = tokens.size();
  // q[t] = dL/d(pooled_t) / n_t, the gradient reaching each context embedding.
  std::vector<std::vector<double>> q(T, std::vector<double>(s.embed, 0.0));
  std::vector<double> gz(s.vocab), ga(s.hidden);
  for (std::size_t t = 0; t < T; ++t) {
    const Position& pos = positions[t];
    std::fill(gz.begin(), gz.end(), 0.0);
    dlogits(t, pos.logp, gz);
    for (int v = 0; v < s.vocab; ++v) grad.b_out(v) += gz[v];
    for (int j = 0; j < s.hidden; ++j) {
      const double h = pos.hidden[j];
      double gh = 0;
      for (int v = 0; v < s.vocab; ++v) {
        grad.w_out(j, v) += h * gz[v];
        gh += params.w_out(j, v) * gz[v];
      }
      ga[j] = gh * (1.0 - h * h);
      grad.b_hidden(j) += ga[j];
    }
    if (pos.context_len == 0) continue;
    for (int k = 0; k < s.embed; ++k) {
      double ge = 0;
      for (int j = 0; j < s.hidden; ++j) {
        grad.w_hidden(k, j) += pos.pooled[k] * ga[j];
        ge += params.w_hidden(k, j) * ga[j];
      }
      q[t][k] = ge / static_cast<double>(pos.context_len);
    }
  }
  // A context token at index i is pooled into every position whose context
  // contains it; suffix sums of q give its total gradient.
  std::vector<double> suffix(s.embed, 0.0);
  for (std::size_t t = T; t-- > 0;) {
    for (int k = 0; k < s.embed; ++k) suffix[k] += q[t][k];
    // tokens[t-1] is in the context of positions t..T-1.
    if (t >= 1) {
      for (int k = 0; k < s.embed; ++k) grad.embedding(tokens[t - 1], k) += suffix[k];
    }
  }
  for (TokenId tok : prompt) {
    for (int k = 0; k < s.embed; ++k) grad.embedding(tok, k) += suffix[k];
  }
}

PolicyParams grad_logprob(const PolicyParams& params, std::span<const TokenId> prompt,
                          std::span<const TokenId> tokens) {
  PolicyParams grad(params.shape());
  accumulate_sequence_grad(
      params, prompt, tokens,
      [&](std::size_t t, std::span<const double> logp, std::span<double> g) {
        for (std::size_t v = 0; v < g.size(); ++v) g[v] = -std::exp(logp[v]);
        g[tokens[t]] += 1.0;
      },
      grad);
  return grad;
}

double sequence_logprob(const PolicyParams& params, std::span<const TokenId> prompt,
                        std::span<const TokenId> tokens) {
  const auto positions = forward_sequence(params, prompt, tokens);
  double total = 0;
  for (std::size_t t = 0; t < tokens.size(); ++t) total += positions[t].logp[tokens[t]];
  return total;
}

namespace {

constexpr std::string_view kMagic = "stagerl-policy";
constexpr int kVersion = 1;

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto& s = ckpt.params.shape();
  if (!ckpt.vocab.empty() && static_cast<int>(ckpt.vocab.size()) != s.vocab) {
    throw PolicyError("checkpoint vocab size does not match the parameter shape");
  }
  std::ostringstream out;
  out << kMagic << ' ' << kVersion << '\n';
  out << "shape " << s.vocab << ' ' << s.embed << ' ' << s.hidden << '\n';
  out << "vocab " << ckpt.vocab.size() << '\n';
  for (const auto& w : ckpt.vocab) out << nlohmann::json(w).dump() << '\n';
  out << "values " << ckpt.params.size() << '\n';
  for (double v : ckpt.params.values()) out << format_double(v) << '\n';
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write checkpoint " + path.string());
  f << out.str();
  if (!f) throw std::runtime_error("error writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read checkpoint " + path.string());
  auto fail = [&](const std::string& what) -> PolicyError {
    return PolicyError(path.string() + ": " + what);
  };
  std::string line, word;
  if (!std::getline(f, line)) throw fail("empty file");
  {
    std::istringstream in(line);
    int version = 0;
    if (!(in >> word >> version) || word != kMagic) throw fail("not a policy checkpoint");
    if (version != kVersion) throw fail("unsupported version " + std::to_string(version));
  }
  PolicyShape shape;
  std::size_t vocab_count = 0, value_count = 0;
  if (!std::getline(f, line)) throw fail("missing shape");
  {
    std::istringstream in(line);
    if (!(in >> word >> shape.vocab >> shape.embed >> shape.hidden) || word != "shape") throw fail("bad shape line");
  }
  Checkpoint ckpt;
  ckpt.params = PolicyParams(shape);
  if (!std::getline(f, line)) throw fail("missing vocab");
  {
    std::istringstream in(line);
    if (!(in >> word >> vocab_count) || word != "vocab") throw fail("bad vocab line");
  }
  for (std::size_t i = 0; i < vocab_count; ++i) {
    if (!std::getline(f, line)) throw fail("truncated vocab");
    try {
      ckpt.vocab.push_back(nlohmann::json::parse(line).get<std::string>());
    } catch (const nlohmann::json::exception&) {
      throw fail("bad vocab entry " + std::to_string(i));
    }
  }
  if (vocab_count != 0 && static_cast<int>(vocab_count) != shape.vocab) throw fail("vocab size mismatch");
  if (!std::getline(f, line)) throw fail("missing values");
  {
    std::istringstream in(line);
    if (!(in >> word >> value_count) || word != "values") throw fail("bad values line");
  }
  if (value_count != shape.param_count()) throw fail("value count does not match shape");
  for (std::size_t i = 0; i < value_count; ++i) {
    if (!std::getline(f, line)) throw fail("truncated values");
    double v = 0;
    auto [end, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc() || end != line.data() + line.size()) throw fail("bad value on entry " + std::to_string(i));
    ckpt.params.values()[i] = v;
  }
  return ckpt;
}

}  // namespace stagerl
