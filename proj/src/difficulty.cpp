#include "stagerl/difficulty.hpp"

#include <algorithm>
#include <set>

#include "stagerl/rng.hpp"

namespace stagerl {

std::string_view to_string(Tier t) {
  switch (t) {
    case Tier::tier_1_5b: return "tier_1_5b";
    case Tier::tier_7b: return "tier_7b";
    case Tier::tier_32b: return "tier_32b";
    case Tier::tier_r1: return "tier_r1";
  }
  return "unknown";
}

Tier parse_tier(std::string_view s) {
  for (Tier t : kAllTiers) {
    if (to_string(t) == s) return t;
  }
  throw DifficultyError("unknown tier '" + std::string(s) + "'");
}

TierMap default_tier_map() {
  TierMap m;
  for (Tier t : kAllTiers) m.emplace(std::string(to_string(t)), t);
  m.emplace("DeepSeek-R1-Distill-Qwen-1.5B", Tier::tier_1_5b);
  m.emplace("DeepSeek-R1-Distill-Qwen-7B", Tier::tier_7b);
  m.emplace("DeepSeek-R1-Distill-Qwen-32B", Tier::tier_32b);
  m.emplace("DeepSeek-R1", Tier::tier_r1);
  return m;
}

std::vector<PassRateTable> aggregate_pass_rates(std::span<const ScoreRecord> scores, const TierMap& tiers,
                                                PassRule rule) {
  std::set<std::string> unknown;
  std::map<std::string, PassRateTable> by_problem;
  for (const ScoreRecord& s : scores) {
    auto it = tiers.find(s.model_id);
    if (it == tiers.end()) {
      unknown.insert(s.model_id);
      continue;
    }
    PassRateTable& t = by_problem[s.problem_id];
    t.problem_id = s.problem_id;
    TierRate& r = t.rates[it->second];
    ++r.attempts;
    r.passed += s.score >= rule.threshold;
  }
  if (!unknown.empty()) {
    std::string msg = "unknown model ids:";
    for (const auto& u : unknown) msg += " '" + u + "'";
    throw DifficultyError(msg);
  }
  std::vector<PassRateTable> out;
  out.reserve(by_problem.size());
  for (auto& [id, t] : by_problem) out.push_back(std::move(t));
  return out;
}

BucketAssignment assign_level(const PassRateTable& t, const LevelRules& rules) {
  auto get = [&](Tier tier) -> const TierRate* {
    auto it = t.rates.find(tier);
    return it == t.rates.end() || it->second.attempts <= 0 ? nullptr : &it->second;
  };
  const TierRate* small = get(Tier::tier_1_5b);
  const TierRate* mid = get(Tier::tier_7b);
  const TierRate* large = get(Tier::tier_32b);
  const TierRate* r1 = get(Tier::tier_r1);
  auto result = [&](Level l, std::string_view why) { return BucketAssignment{t.problem_id, l, std::string(why)}; };

  if (!small && !large && !r1) return result(Level::unassigned, reason::insufficient);
  if (r1 && r1->zero()) return result(Level::discarded, reason::r1_fails);

  const bool both_partial = small && mid && small->partial() && mid->partial();
  if (small && small->partial() && (rules.level1_wins_overlap || !both_partial)) {
    return result(Level::level1, reason::small_partial);
  }
  if (small && mid) {
    if (small->zero() && mid->full()) return result(Level::level2, reason::small_fails_mid_full);
    if (small->zero() && mid->partial()) return result(Level::level2, reason::small_fails_mid_partial);
    if (both_partial) return result(Level::level2, reason::both_partial);
  }
  if (large) {
    if (large->zero()) return result(Level::level3, reason::large_fails);
    if (large->full()) return result(Level::level3, reason::large_solves);
  }
  return result(Level::unassigned, reason::no_clause);
}

std::size_t retention_count(std::size_t n, int percent) {
  return (static_cast<std::size_t>(percent) * n + 50) / 100;
}

int retention_percent(Domain d) { return d == Domain::math ? 50 : 10; }

std::vector<BucketAssignment> retention_sample(std::span<const BucketAssignment> candidates, Domain domain,
                                               std::uint64_t seed) {
  std::vector<BucketAssignment> pool(candidates.begin(), candidates.end());
  std::sort(pool.begin(), pool.end(),
            [](const BucketAssignment& a, const BucketAssignment& b) { return a.problem_id < b.problem_id; });
  Engine rng(stream_seed(seed, {static_cast<std::uint64_t>(domain), 0x7e7e}));
  shuffle_in_place(pool, rng);
  pool.resize(retention_count(pool.size(), retention_percent(domain)));
  std::sort(pool.begin(), pool.end(),
            [](const BucketAssignment& a, const BucketAssignment& b) { return a.problem_id < b.problem_id; });
  return pool;
}

std::vector<BucketAssignment> bucket_problems(std::span<const PassRateTable> tables,
                                              const std::map<std::string, Domain>& domains,
                                              Domain default_domain, std::uint64_t seed, const LevelRules& rules) {
  std::vector<BucketAssignment> out;
  out.reserve(tables.size());
  std::map<Domain, std::vector<BucketAssignment>> candidates;
  for (const PassRateTable& t : tables) {
    BucketAssignment b = assign_level(t, rules);
    if (b.level == Level::level3 && b.reason == reason::large_solves) {
      auto it = domains.find(b.problem_id);
      candidates[it == domains.end() ? default_domain : it->second].push_back(b);
    }
    out.push_back(std::move(b));
  }
  std::set<std::string> kept;
  for (const auto& [domain, list] : candidates) {
    for (const auto& b : retention_sample(list, domain, seed)) kept.insert(b.problem_id);
  }
  for (BucketAssignment& b : out) {
    if (b.level == Level::level3 && b.reason == reason::large_solves && !kept.count(b.problem_id)) {
      b.level = Level::discarded;
      b.reason = std::string(reason::retention_dropped);
    }
  }
  std::sort(out.begin(), out.end(),
            [](const BucketAssignment& a, const BucketAssignment& b) { return a.problem_id < b.problem_id; });
  return out;
}

}  // namespace stagerl
