#include <doctest.h>

#include <limits>

#include "stagerl/stack_machine.hpp"

using namespace stagerl;

namespace {

std::vector<std::string> prog(std::initializer_list<const char*> toks) { return {toks.begin(), toks.end()}; }

SyntheticTask task(const char* name, std::int64_t (*f)(std::int64_t)) {
  SyntheticTask t{name, {}};
  for (int x = 1; x <= 4; ++x) t.tests.push_back({std::to_string(x), std::to_string(f(x)), 1000, 64});
  return t;
}

}  // namespace

TEST_CASE("interpreter basics") {
  CHECK(interpret(prog({"x", "1", "+"}), 5) == 6);
  CHECK(interpret(prog({"x", "dup", "*"}), -3) == 9);
  CHECK(interpret(prog({"7", "2", "/"}), 0) == 3);
  CHECK(interpret(prog({"7", "2", "%"}), 0) == 1);
  CHECK(interpret(prog({"1", "2", "swap", "-"}), 0) == 1);
  CHECK(interpret(prog({"x", "neg"}), 4) == -4);
  CHECK(interpret(prog({"x", "3", "drop"}), 4) == 4);
}

TEST_CASE("ill-formed programs are runtime errors") {
  CHECK_FALSE(interpret(prog({}), 1));
  CHECK_FALSE(interpret(prog({"+"}), 1));
  CHECK_FALSE(interpret(prog({"x", "x"}), 1));
  CHECK_FALSE(interpret(prog({"x", "0", "/"}), 1));
  CHECK_FALSE(interpret(prog({"x", "0", "%"}), 1));
  CHECK_FALSE(interpret(prog({"banana"}), 1));
  CHECK_FALSE(interpret(prog({"x", "x", "*"}), std::numeric_limits<std::int64_t>::max()));
}

TEST_CASE("successor task passes with x + 1") {
  const auto t = task("successor", [](std::int64_t x) { return x + 1; });
  const auto rs = simulate_execution(prog({"x", "1", "+"}), t);
  REQUIRE(rs.size() == 4);
  for (const auto& r : rs) CHECK(r.status == ExecStatus::passed);
  CHECK(score_code(rs) == 1.0);
}

TEST_CASE("empty program fails every test with a runtime error") {
  const auto t = task("successor", [](std::int64_t x) { return x + 1; });
  for (const auto& r : simulate_execution(prog({}), t)) CHECK(r.status == ExecStatus::runtime_error);
}

TEST_CASE("a program right only on even inputs scores one half") {
  // Target 2x; the program computes 2x + (x mod 2): 3, 4, 7, 8 against
  // 2, 4, 6, 8.
  const auto t = task("double", [](std::int64_t x) { return 2 * x; });
  const auto rs = simulate_execution(prog({"x", "2", "*", "x", "2", "%", "+"}), t);
  CHECK(rs[0].status == ExecStatus::wrong_output);
  CHECK(rs[1].status == ExecStatus::passed);
  CHECK(rs[2].status == ExecStatus::wrong_output);
  CHECK(rs[3].status == ExecStatus::passed);
  CHECK(score_code(rs) == 0.5);
}

TEST_CASE("simulation is deterministic") {
  const auto t = task("square", [](std::int64_t x) { return x * x; });
  const auto p = prog({"x", "x", "*"});
  const auto a = simulate_execution(p, t), b = simulate_execution(p, t);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].status == b[i].status);
    CHECK(a[i].stdout_text == b[i].stdout_text);
  }
}
