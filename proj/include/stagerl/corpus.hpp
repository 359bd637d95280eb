// Data model for problems, rollouts, scores and bucket assignments, plus
// line-delimited JSON readers and writers for each record type.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace stagerl {

using TokenId = std::int32_t;

enum class Domain { math, code };

std::string_view to_string(Domain d);
Domain parse_domain(std::string_view s);

struct TestCase {
  std::string input;  // serialized as "stdin"
  std::string expected_stdout;
  int time_limit_ms = 1000;
  int memory_limit_mb = 256;

  bool operator==(const TestCase&) const = default;
};

struct Problem {
  std::string id;
  Domain domain = Domain::math;
  std::string prompt;
  std::optional<std::string> answer;
  std::optional<std::vector<TestCase>> tests;
  std::map<std::string, std::string> meta;

  bool operator==(const Problem&) const = default;
};

struct Rollout {
  std::string problem_id;
  std::string model_id;
  int attempt = 0;
  std::string text;
  std::optional<std::vector<TokenId>> token_ids;
  std::optional<std::vector<double>> logprobs;
  bool truncated = false;

  bool operator==(const Rollout&) const = default;
};

struct ScoreRecord {
  std::string problem_id;
  std::string model_id;
  int attempt = 0;
  double score = 0.0;
  bool passed = false;

  bool operator==(const ScoreRecord&) const = default;
};

enum class Level { level1, level2, level3, discarded, unassigned };

std::string_view to_string(Level l);
Level parse_level(std::string_view s);

struct BucketAssignment {
  std::string problem_id;
  Level level = Level::unassigned;
  std::string reason;

  bool operator==(const BucketAssignment&) const = default;
};

/// Raised for schema violations and malformed files. `line()` is 1-based, or
/// 0 when the error is not tied to a line.
class CorpusError : public std::runtime_error {
 public:
  CorpusError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Invariant checks; throw CorpusError describing the first violation.
void validate(const TestCase& t);
void validate(const Problem& p);
void validate(const Rollout& r);
void validate(const ScoreRecord& s);
void validate(const BucketAssignment& b);

void to_json(nlohmann::json& j, const TestCase& t);
void from_json(const nlohmann::json& j, TestCase& t);
void to_json(nlohmann::json& j, const Problem& p);
void from_json(const nlohmann::json& j, Problem& p);
void to_json(nlohmann::json& j, const Rollout& r);
void from_json(const nlohmann::json& j, Rollout& r);
void to_json(nlohmann::json& j, const ScoreRecord& s);
void from_json(const nlohmann::json& j, ScoreRecord& s);
void to_json(nlohmann::json& j, const BucketAssignment& b);
void from_json(const nlohmann::json& j, BucketAssignment& b);

/// Reads a problems file. Records come back in file order; duplicate ids are
/// rejected with an error naming both lines.
std::vector<Problem> read_corpus(const std::filesystem::path& path);
std::vector<Rollout> read_rollouts(const std::filesystem::path& path);
std::vector<ScoreRecord> read_scores(const std::filesystem::path& path);
std::vector<BucketAssignment> read_buckets(const std::filesystem::path& path);

/// Validates every record, then writes one JSON object per line. Nothing is
/// written if any record is invalid.
template <typename Record>
void write_records(const std::filesystem::path& path, std::span<const Record> records);

template <typename Record>
void write_records(const std::filesystem::path& path, const std::vector<Record>& records) {
  write_records(path, std::span<const Record>(records));
}

/// Serializes one record to its single-line JSON form (no trailing newline).
template <typename Record>
std::string to_line(const Record& r) {
  nlohmann::json j = r;
  return j.dump();
}

/// Length of a rollout in tokens; whitespace-separated words when token ids
/// are absent.
std::size_t token_count(const Rollout& r);

}  // namespace stagerl
