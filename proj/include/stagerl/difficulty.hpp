// Per-model pass rates and difficulty levels.
#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stagerl/corpus.hpp"

namespace stagerl {

enum class Tier { tier_1_5b, tier_7b, tier_32b, tier_r1 };

inline constexpr Tier kAllTiers[] = {Tier::tier_1_5b, Tier::tier_7b, Tier::tier_32b, Tier::tier_r1};

std::string_view to_string(Tier t);
Tier parse_tier(std::string_view s);

class DifficultyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TierRate {
  int passed = 0;
  int attempts = 0;
  double pass_rate() const { return static_cast<double>(passed) / attempts; }
  bool zero() const { return passed == 0; }
  bool full() const { return passed == attempts; }
  bool partial() const { return passed > 0 && passed < attempts; }

  bool operator==(const TierRate&) const = default;
};

struct PassRateTable {
  std::string problem_id;
  std::map<Tier, TierRate> rates;  // tiers without attempts are absent

  bool operator==(const PassRateTable&) const = default;
};

/// model_id -> tier. The tier names themselves always map to their tier.
using TierMap = std::map<std::string, Tier, std::less<>>;

/// Tier names plus the distilled-model names the levels were defined with.
TierMap default_tier_map();

/// An attempt counts as passed iff its score is >= threshold. The default
/// (1.0) makes a code attempt pass only when every test is green.
struct PassRule {
  double threshold = 1.0;
};

/// One table per problem, sorted by problem id. Throws DifficultyError
/// listing every unknown model id.
std::vector<PassRateTable> aggregate_pass_rates(std::span<const ScoreRecord> scores, const TierMap& tiers,
                                                PassRule rule = {});

struct LevelRules {
  // Both tiers partially solving also matches level 1; with this set (the
  // default) level 1 wins, otherwise the problem goes to level 2.
  bool level1_wins_overlap = true;
};

// Reason strings, one per clause.
namespace reason {
inline constexpr std::string_view r1_fails = "r1 pass rate 0";
inline constexpr std::string_view small_partial = "1.5b partial";
inline constexpr std::string_view small_fails_mid_full = "1.5b fails, 7b full";
inline constexpr std::string_view small_fails_mid_partial = "1.5b fails, 7b partial";
inline constexpr std::string_view both_partial = "1.5b and 7b partial";
inline constexpr std::string_view large_fails = "32b fails";
inline constexpr std::string_view large_solves = "32b solves";
inline constexpr std::string_view retention_dropped = "32b solves, not retained";
inline constexpr std::string_view no_clause = "no clause matched";
inline constexpr std::string_view insufficient = "insufficient data";
}  // namespace reason

BucketAssignment assign_level(const PassRateTable& t, const LevelRules& rules = {});

/// Number kept out of n: round-half-up of percent/100 * n, in exact integer
/// arithmetic.
std::size_t retention_count(std::size_t n, int percent);

/// Retention percent per domain: 50 for math, 10 for code.
int retention_percent(Domain d);

/// Keeps a seeded uniform subset of `candidates` (the order of the input
/// does not matter). Returned sorted by problem id.
std::vector<BucketAssignment> retention_sample(std::span<const BucketAssignment> candidates, Domain domain,
                                               std::uint64_t seed);

/// assign_level for every table, then retention sampling of the level-3
/// problems the 32b tier solved, per domain. Candidates not retained are
/// marked discarded. `domains` maps problem id to domain; missing ids use
/// `default_domain`. Sorted by problem id.
std::vector<BucketAssignment> bucket_problems(std::span<const PassRateTable> tables,
                                              const std::map<std::string, Domain>& domains,
                                              Domain default_domain, std::uint64_t seed,
                                              const LevelRules& rules = {});

}  // namespace stagerl
