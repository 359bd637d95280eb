// Running candidate programs against test cases and scoring the outcome.
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stagerl/corpus.hpp"

namespace stagerl {

enum class ExecStatus { passed, wrong_output, timeout, runtime_error, memory_exceeded, sandbox_error };

std::string_view to_string(ExecStatus s);

struct ExecutionResult {
  int test_index = 0;
  ExecStatus status = ExecStatus::sandbox_error;
  std::string stdout_text;  // capped at JudgeConfig::output_cap_bytes
  std::int64_t wall_ms = 0;
  std::string detail;       // diagnostic for sandbox/runtime failures
};

struct JudgeConfig {
  // Whitespace-separated argv template. "{source}" expands to the absolute
  // path of the written program, "{dir}" to its scratch directory.
  std::string runner_command = "python3 {source}";
  std::string source_filename = "main.py";
  int max_parallel = 1;
  std::size_t output_cap_bytes = 1 << 16;
  // Empty: $STAGERL_SCRATCH, else <tmp>/stagerl-judge.
  std::filesystem::path scratch_root;
  bool keep_scratch = false;
  // Write confinement (Landlock) and write detection (seccomp user
  // notification). Both degrade to no-ops on kernels without support.
  bool confine_writes = true;

  bool operator==(const JudgeConfig&) const = default;
};

void validate(const JudgeConfig& cfg);

/// Runs `source` once per test, each in a fresh child process with its own
/// scratch directory; results are in test order.
std::vector<ExecutionResult> run_tests(std::string_view source, std::span<const TestCase> tests,
                                       const JudgeConfig& cfg);

/// Trailing whitespace removed from every line, trailing newlines removed.
std::string normalize_output(std::string_view s);

/// #passed / #tests. Throws std::invalid_argument on an empty list.
double score_code(std::span<const ExecutionResult> results);

/// Which scratch root the judge would use for `cfg`.
std::filesystem::path scratch_root(const JudgeConfig& cfg);

}  // namespace stagerl
