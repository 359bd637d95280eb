#include "stagerl/code_judge.hpp"

#include <stdlib.h>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <system_error>
#include <thread>

#include "sandbox.hpp"

namespace stagerl {

namespace fs = std::filesystem;

std::string_view to_string(ExecStatus s) {
  switch (s) {
    case ExecStatus::passed: return "passed";
    case ExecStatus::wrong_output: return "wrong_output";
    case ExecStatus::timeout: return "timeout";
    case ExecStatus::runtime_error: return "runtime_error";
    case ExecStatus::memory_exceeded: return "memory_exceeded";
    case ExecStatus::sandbox_error: return "sandbox_error";
  }
  return "unknown";
}

void validate(const JudgeConfig& cfg) {
  if (cfg.max_parallel < 1) throw std::invalid_argument("judge: max_parallel must be >= 1");
  if (cfg.output_cap_bytes == 0) throw std::invalid_argument("judge: output_cap_bytes must be positive");
  if (cfg.source_filename.empty() || cfg.source_filename.find('/') != std::string::npos) {
    throw std::invalid_argument("judge: source_filename must be a plain file name");
  }
  std::istringstream in(cfg.runner_command);
  std::string first;
  if (!(in >> first)) throw std::invalid_argument("judge: runner_command is empty");
}

fs::path scratch_root(const JudgeConfig& cfg) {
  if (!cfg.scratch_root.empty()) return cfg.scratch_root;
  if (const char* env = std::getenv("STAGERL_SCRATCH"); env && *env) return env;
  return fs::temp_directory_path() / "stagerl-judge";
}

std::string normalize_output(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find('\n', start);
    if (end == std::string_view::npos) end = s.size();
    std::string_view line = s.substr(start, end - start);
    std::size_t keep = line.find_last_not_of(" \t\r\f\v");
    line = keep == std::string_view::npos ? std::string_view() : line.substr(0, keep + 1);
    out.append(line);
    out.push_back('\n');
    start = end + 1;
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

double score_code(std::span<const ExecutionResult> results) {
  if (results.empty()) throw std::invalid_argument("score_code: no results");
  std::size_t passed = 0;
  for (const auto& r : results) passed += r.status == ExecStatus::passed;
  return static_cast<double>(passed) / static_cast<double>(results.size());
}

namespace {

std::string read_prefix(const fs::path& p, std::size_t limit) {
  std::ifstream in(p, std::ios::binary);
  std::string data(limit, '\0');
  in.read(data.data(), static_cast<std::streamsize>(limit));
  data.resize(static_cast<std::size_t>(in.gcount()));
  return data;
}

void write_file(const fs::path& p, std::string_view content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

std::vector<std::string> expand_command(const std::string& tmpl, const fs::path& source, const fs::path& dir) {
  auto replace_all = [](std::string s, const std::string& from, const std::string& to) {
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
      s.replace(pos, from.size(), to);
    }
    return s;
  };
  std::vector<std::string> argv;
  std::istringstream in(tmpl);
  std::string word;
  while (in >> word) {
    word = replace_all(word, "{source}", source.string());
    argv.push_back(replace_all(word, "{dir}", dir.string()));
  }
  return argv;
}

bool looks_like_oom(const std::string& stderr_text) {
  for (const char* marker : {"MemoryError", "bad_alloc", "Cannot allocate memory", "out of memory"}) {
    if (stderr_text.find(marker) != std::string::npos) return true;
  }
  return false;
}

ExecutionResult run_one(std::string_view source, const TestCase& test, int index, const fs::path& run_dir,
                        const JudgeConfig& cfg) {
  ExecutionResult result;
  result.test_index = index;
  const fs::path dir = run_dir / ("test_" + std::to_string(index));
  try {
    fs::create_directory(dir);
    const fs::path src = dir / cfg.source_filename;
    write_file(src, source);
    write_file(dir / "input.txt", test.input);

    detail::SandboxRequest req;
    req.argv = expand_command(cfg.runner_command, src, dir);
    req.workdir = dir;
    req.stdin_path = dir / "input.txt";
    req.stdout_path = dir / "stdout.txt";
    req.stderr_path = dir / "stderr.txt";
    req.time_limit_ms = test.time_limit_ms;
    req.memory_limit_mb = test.memory_limit_mb;
    req.confine_writes = cfg.confine_writes;

    const detail::SandboxOutcome o = detail::run_sandboxed(req);
    result.wall_ms = o.wall_ms;
    using Kind = detail::SandboxOutcome::Kind;
    if (o.kind == Kind::launch_failed) {
      result.status = ExecStatus::sandbox_error;
      result.detail = o.launch_error;
      return result;
    }
    // Enough of stdout to decide equality even when it exceeds the cap.
    const std::string out = read_prefix(req.stdout_path, cfg.output_cap_bytes + test.expected_stdout.size() + 1);
    result.stdout_text = out.substr(0, std::min(out.size(), cfg.output_cap_bytes));

    if (o.write_violation) {
      result.status = ExecStatus::sandbox_error;
      result.detail = "write outside scratch directory: " + o.violation_path;
    } else if (o.kind == Kind::timed_out || (o.kind == Kind::signaled && o.signal == SIGXCPU)) {
      result.status = ExecStatus::timeout;
      result.wall_ms = std::max<std::int64_t>(result.wall_ms, test.time_limit_ms);
    } else if (o.kind == Kind::signaled || o.exit_code != 0) {
      const std::string err = read_prefix(req.stderr_path, 1 << 16);
      const long limit_kb = static_cast<long>(test.memory_limit_mb) * 1024;
      bool oom = o.max_rss_kb * 10 >= limit_kb * 9 || looks_like_oom(err);
      result.status = oom ? ExecStatus::memory_exceeded : ExecStatus::runtime_error;
      result.detail = o.kind == Kind::signaled ? "killed by signal " + std::to_string(o.signal)
                                               : "exit code " + std::to_string(o.exit_code);
      if (!err.empty()) result.detail += ": " + err.substr(0, 512);
    } else {
      result.status = normalize_output(out) == normalize_output(test.expected_stdout) ? ExecStatus::passed
                                                                                      : ExecStatus::wrong_output;
    }
  } catch (const std::exception& e) {
    result.status = ExecStatus::sandbox_error;
    result.detail = e.what();
  }
  return result;
}

}  // namespace

std::vector<ExecutionResult> run_tests(std::string_view source, std::span<const TestCase> tests,
                                       const JudgeConfig& cfg) {
  validate(cfg);
  if (tests.empty()) throw std::invalid_argument("run_tests: no tests");
  for (const auto& t : tests) validate(t);

  std::vector<ExecutionResult> results(tests.size());
  fs::path run_dir;
  try {
    const fs::path root = scratch_root(cfg);
    fs::create_directories(root);
    std::string tmpl = (root / "run-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::system_error(errno, std::generic_category(), "mkdtemp");
    run_dir = fs::weakly_canonical(tmpl);
  } catch (const std::exception& e) {
    for (std::size_t i = 0; i < tests.size(); ++i) {
      results[i].test_index = static_cast<int>(i);
      results[i].status = ExecStatus::sandbox_error;
      results[i].detail = std::string("scratch setup failed: ") + e.what();
    }
    return results;
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tests.size(); i = next++) {
      results[i] = run_one(source, tests[i], static_cast<int>(i), run_dir, cfg);
    }
  };
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.max_parallel), tests.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  if (!cfg.keep_scratch) {
    std::error_code ec;
    fs::remove_all(run_dir, ec);
  }
  return results;
}

}  // namespace stagerl
