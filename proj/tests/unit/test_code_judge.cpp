#include <doctest.h>

#include <filesystem>

#include "oracles.hpp"
#include "stagerl/code_judge.hpp"
#include "temp_dir.hpp"

using namespace stagerl;

namespace {

std::vector<ExecStatus> statuses(const std::vector<ExecutionResult>& rs) {
  std::vector<ExecStatus> out;
  for (const auto& r : rs) out.push_back(r.status);
  return out;
}

ExecutionResult result(ExecStatus s) { return {0, s, "", 0, ""}; }

}  // namespace

TEST_CASE("judge fixtures reproduce their exact pass ratios") {
  const auto fixtures = oracle::read_jsonl(STAGERL_TEST_DATA "/judge_fixtures.jsonl");
  REQUIRE(fixtures.size() >= 20);
  JudgeConfig cfg;
  for (const auto& f : fixtures) {
    const auto tests = f.at("tests").get<std::vector<TestCase>>();
    const auto rs = run_tests(f.at("source").get<std::string>(), tests, cfg);
    INFO(f.at("name").get<std::string>());
    REQUIRE(rs.size() == tests.size());
    for (std::size_t i = 0; i < rs.size(); ++i) {
      CHECK(rs[i].test_index == int(i));
      CHECK(std::string(to_string(rs[i].status)) == f.at("statuses")[i].get<std::string>());
    }
    CHECK(score_code(rs) == f.at("score").get<double>());
  }
}

TEST_CASE("timeouts report at least the limit") {
  const auto rs = run_tests("while True: pass\n", std::vector<TestCase>{{"", "", 100, 256}}, {});
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].status == ExecStatus::timeout);
  CHECK(rs[0].wall_ms >= 100);
}

TEST_CASE("a missing runner is a sandbox error on every test") {
  JudgeConfig cfg;
  cfg.runner_command = "no-such-interpreter-xyz {source}";
  const auto rs = run_tests("print(1)", std::vector<TestCase>(3, TestCase{"", "1", 1000, 256}), cfg);
  CHECK(statuses(rs) == std::vector<ExecStatus>(3, ExecStatus::sandbox_error));
}

TEST_CASE("writes outside the scratch directory are blocked") {
  TempDir dir;
  const auto target = dir / "escaped.txt";
  const std::string probe = "open(" + nlohmann::json(target.string()).dump() + ", 'w').write('x')\nprint('done')\n";
  const auto rs = run_tests(probe, std::vector<TestCase>{{"", "done", 2000, 256}}, {});
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].status == ExecStatus::sandbox_error);
  CHECK_FALSE(std::filesystem::exists(target));

  // Writing inside the working directory is fine.
  const auto ok = run_tests("open('local.txt', 'w').write('x')\nprint(open('local.txt').read())\n",
                            std::vector<TestCase>{{"", "x", 2000, 256}}, {});
  CHECK(ok[0].status == ExecStatus::passed);
}

TEST_CASE("scratch directories are removed unless kept") {
  TempDir dir;
  JudgeConfig cfg;
  cfg.scratch_root = dir.path();
  run_tests("print(1)", std::vector<TestCase>{{"", "1", 1000, 256}}, cfg);
  CHECK(std::filesystem::is_empty(dir.path()));
  cfg.keep_scratch = true;
  run_tests("print(1)", std::vector<TestCase>{{"", "1", 1000, 256}, {"", "1", 1000, 256}}, cfg);
  int runs = 0, tests = 0;
  for (const auto& run : std::filesystem::directory_iterator(dir.path())) {
    ++runs;
    for (const auto& t : std::filesystem::directory_iterator(run.path())) tests += t.is_directory();
  }
  CHECK(runs == 1);
  CHECK(tests == 2);
}

TEST_CASE("parallel judging keeps order and statuses") {
  const std::string src = "n = int(input())\nprint(n if n % 3 else -1)\n";
  std::vector<TestCase> tests;
  for (int i = 1; i <= 6; ++i) tests.push_back({std::to_string(i), std::to_string(i), 2000, 256});
  JudgeConfig serial, parallel;
  parallel.max_parallel = 3;
  const auto a = run_tests(src, tests, serial);
  const auto b = run_tests(src, tests, parallel);
  CHECK(statuses(a) == statuses(b));
  CHECK(score_code(a) == doctest::Approx(4.0 / 6.0));
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(b[i].test_index == int(i));
}

TEST_CASE("score_code is the pass ratio") {
  using S = ExecStatus;
  std::vector<ExecutionResult> r = {result(S::passed), result(S::passed), result(S::wrong_output), result(S::passed)};
  CHECK(score_code(r) == 0.75);
  CHECK(score_code(std::vector<ExecutionResult>(5, result(S::timeout))) == 0.0);
  CHECK(score_code(std::vector<ExecutionResult>(4, result(S::passed))) == 1.0);
  CHECK_THROWS(score_code(std::vector<ExecutionResult>{}));
  // ratio * n is always the integer pass count
  for (int n = 1; n <= 9; ++n) {
    for (int k = 0; k <= n; ++k) {
      std::vector<ExecutionResult> v(n, result(S::runtime_error));
      for (int i = 0; i < k; ++i) v[i].status = S::passed;
      CHECK(score_code(v) * n == doctest::Approx(k).epsilon(1e-12));
    }
  }
}

TEST_CASE("output normalization") {
  CHECK(normalize_output("a  \nb\t\n\n\n") == "a\nb");
  CHECK(normalize_output("a\r\nb\r\n") == "a\nb");
  CHECK(normalize_output(" a") == " a");
  CHECK(normalize_output("") == "");
}

TEST_CASE("config validation") {
  JudgeConfig cfg;
  cfg.max_parallel = 0;
  CHECK_THROWS(validate(cfg));
  cfg = {};
  cfg.runner_command = "  ";
  CHECK_THROWS(validate(cfg));
  cfg = {};
  cfg.source_filename = "a/b.py";
  CHECK_THROWS(validate(cfg));
  CHECK_THROWS(run_tests("print(1)", std::vector<TestCase>{}, JudgeConfig{}));
}
