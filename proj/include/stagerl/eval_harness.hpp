// Pass@1 over repeated sampling runs.
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stagerl/corpus.hpp"
#include "stagerl/reward.hpp"
#include "stagerl/toy_policy.hpp"
#include "stagerl/vocabulary.hpp"

namespace stagerl {

struct EvalConfig {
  int runs = 16;
  double temperature = 0.6;
  double top_p = 0.95;
  int max_len = 32;
  std::uint64_t seed = 0;

  bool operator==(const EvalConfig&) const = default;
};

void validate(const EvalConfig& cfg);

struct ProblemPassCount {
  std::string problem_id;
  int passes = 0;

  bool operator==(const ProblemPassCount&) const = default;
};

struct EvalReport {
  std::string benchmark;
  double pass_at_1 = 0;
  std::vector<double> per_run_accuracy;
  std::vector<ProblemPassCount> per_problem;  // in problem order
  EvalConfig config;

  bool operator==(const EvalReport&) const = default;
};

/// Fills pass_at_1, per-run accuracies and per-problem counts from a
/// runs x problems matrix of binary outcomes.
void aggregate(EvalReport& report, const std::vector<std::vector<bool>>& passed,
               std::span<const std::string> problem_ids);

/// Math counts as passed when score_math is 1; code when every test passes.
bool counts_as_pass(double score);

/// For each run r and problem p, samples one response with the stream keyed
/// by (seed, r, p) and scores it. Throws VerifierConfigError when a problem
/// cannot be scored at all.
EvalReport evaluate(const PolicyParams& params, const Vocabulary& vocab, std::span<const Problem> problems,
                    Rewarder& rewarder, const EvalConfig& cfg, std::string benchmark);

struct ReportDelta {
  std::string benchmark;
  double delta = 0;  // b - a
  bool improved = false;
  bool regressed = false;
};

/// Deltas of b relative to a, one per benchmark (matched by name). Throws
/// std::invalid_argument when the benchmark sets differ.
std::vector<ReportDelta> compare_reports(std::span<const EvalReport> a, std::span<const EvalReport> b);

void to_json(nlohmann::json& j, const EvalConfig& c);
void from_json(const nlohmann::json& j, EvalConfig& c);
void to_json(nlohmann::json& j, const EvalReport& r);
void from_json(const nlohmann::json& j, EvalReport& r);

void write_reports(const std::filesystem::path& path, std::span<const EvalReport> reports);
std::vector<EvalReport> read_reports(const std::filesystem::path& path);

}  // namespace stagerl
