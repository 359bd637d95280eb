#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "stagerl/curriculum.hpp"

namespace stagerl {

namespace {

// Largest remainder with per-component priority offsets: every count is the
// floor or ceiling of its exact share, and the leftover slots go to the
// largest (remainder + carry). With a zero carry this is plain largest
// remainder.
std::vector<int> apportion_with_carry(std::span<const double> weights, int total, Engine& rng,
                                      std::span<const double> carry) {
  if (weights.empty()) throw std::invalid_argument("apportion: no weights");
  if (total < 0) throw std::invalid_argument("apportion: negative total");
  double sum = 0;
  for (double w : weights) {
    if (!(w > 0) || !std::isfinite(w)) throw std::invalid_argument("apportion: weights must be positive");
    sum += w;
  }
  const std::size_t n = weights.size();
  std::vector<int> counts(n);
  std::vector<double> exact(n), priority(n);
  int assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    exact[i] = total * weights[i] / sum;
    counts[i] = static_cast<int>(std::floor(exact[i]));
    priority[i] = exact[i] - counts[i] + (carry.empty() ? 0.0 : carry[i]);
    assigned += counts[i];
  }
  // Random tie-break keys, drawn for every entry so the stream advances the
  // same way regardless of the weights.
  std::vector<std::uint64_t> tie(n);
  for (auto& t : tie) t = rng();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (priority[a] != priority[b]) return priority[a] > priority[b];
    return tie[a] < tie[b];
  });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++counts[order[k]];

  // Every component gets a slot when there are enough. The slot comes from
  // the most over-allocated component that can spare one.
  if (static_cast<std::size_t>(total) >= n) {
    for (std::size_t i = 0; i < n; ++i) {
      if (counts[i] > 0) continue;
      std::size_t donor = n;
      for (std::size_t j = 0; j < n; ++j) {
        if (counts[j] < 2) continue;
        if (donor == n || counts[j] - exact[j] > counts[donor] - exact[donor]) donor = j;
      }
      --counts[donor];
      ++counts[i];
    }
  }
  return counts;
}

}  // namespace

std::vector<int> apportion(std::span<const double> weights, int total, Engine& rng) {
  return apportion_with_carry(weights, total, rng, {});
}

BatchComposer::BatchComposer(std::vector<MixComponent> mix, std::uint64_t seed) : seed_(seed) {
  if (mix.empty()) throw std::invalid_argument("batch composer: empty mix");
  for (auto& c : mix) {
    if (c.problems.empty()) throw std::invalid_argument("batch composer: pool '" + c.name + "' is empty");
    if (!(c.weight > 0) || !std::isfinite(c.weight)) {
      throw std::invalid_argument("batch composer: weight of '" + c.name + "' must be positive");
    }
    pools_.push_back(Pool{std::move(c), {}, 0, 0});
  }
  for (std::size_t i = 0; i < pools_.size(); ++i) reshuffle(i);
}

void BatchComposer::reshuffle(std::size_t i) {
  Pool& p = pools_[i];
  p.order.resize(p.component.problems.size());
  std::iota(p.order.begin(), p.order.end(), 0);
  Engine rng(stream_seed(seed_, {0x9001, i, p.epoch}));
  shuffle_in_place(p.order, rng);
  p.cursor = 0;
  ++p.epoch;
}

std::vector<Problem> BatchComposer::next(int batch_size) {
  if (batch_size < 1) throw std::invalid_argument("batch composer: batch size must be positive");
  std::vector<double> weights;
  for (const auto& p : pools_) weights.push_back(p.component.weight);
  Engine rng(stream_seed(seed_, {0xA770, batches_++}));
  if (carry_.empty()) carry_.assign(pools_.size(), 0.0);
  const std::vector<int> counts = apportion_with_carry(weights, batch_size, rng, carry_);
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (std::size_t i = 0; i < pools_.size(); ++i) carry_[i] += batch_size * weights[i] / sum - counts[i];
  std::vector<Problem> batch;
  last_components_.clear();
  for (std::size_t i = 0; i < pools_.size(); ++i) {
    for (int k = 0; k < counts[i]; ++k) {
      if (pools_[i].cursor == pools_[i].order.size()) reshuffle(i);
      Pool& p = pools_[i];
      batch.push_back(p.component.problems[p.order[p.cursor++]]);
      last_components_.push_back(static_cast<int>(i));
    }
  }
  return batch;
}

std::vector<Problem> compose_batch(std::vector<MixComponent> mix, int batch_size, std::uint64_t seed) {
  return BatchComposer(std::move(mix), seed).next(batch_size);
}

void validate(const PlateauConfig& cfg) {
  if (cfg.window < 2) throw std::invalid_argument("plateau: window must be >= 2");
  if (cfg.patience < 1) throw std::invalid_argument("plateau: patience must be >= 1");
  if (!(cfg.min_delta >= 0) || !std::isfinite(cfg.min_delta)) {
    throw std::invalid_argument("plateau: min_delta must be non-negative");
  }
}

bool detect_plateau(std::span<const double> history, const PlateauConfig& cfg) {
  validate(cfg);
  const std::size_t w = static_cast<std::size_t>(cfg.window);
  const std::size_t patience = static_cast<std::size_t>(cfg.patience);
  if (history.size() < w) return false;
  std::vector<double> means;
  for (std::size_t i = 0; i + w <= history.size(); ++i) {
    double s = 0;
    for (std::size_t k = i; k < i + w; ++k) s += history[k];
    means.push_back(s / static_cast<double>(w));
  }
  if (means.size() <= patience) return false;
  const auto split = means.end() - static_cast<std::ptrdiff_t>(patience);
  const double earlier = *std::max_element(means.begin(), split);
  const double recent = *std::max_element(split, means.end());
  return recent - earlier < cfg.min_delta;
}

}  // namespace stagerl
