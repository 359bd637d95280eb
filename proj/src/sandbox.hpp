// Child-process runner used by the code judge. Linux only.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace stagerl::detail {

struct SandboxRequest {
  std::vector<std::string> argv;  // argv[0] is resolved through PATH
  std::filesystem::path workdir;  // the only writable location
  std::filesystem::path stdin_path;
  std::filesystem::path stdout_path;
  std::filesystem::path stderr_path;
  int time_limit_ms = 1000;
  int memory_limit_mb = 256;
  std::uint64_t file_size_limit = 64ull << 20;
  bool confine_writes = true;
};

struct SandboxOutcome {
  enum class Kind { exited, signaled, timed_out, launch_failed };
  Kind kind = Kind::launch_failed;
  int exit_code = 0;
  int signal = 0;
  std::int64_t wall_ms = 0;
  long max_rss_kb = 0;
  bool write_violation = false;
  std::string violation_path;
  std::string launch_error;
};

SandboxOutcome run_sandboxed(const SandboxRequest& req);

/// Resolves `name` through $PATH (names containing '/' are used as given).
/// Empty when nothing executable is found.
std::filesystem::path resolve_executable(const std::string& name);

}  // namespace stagerl::detail
