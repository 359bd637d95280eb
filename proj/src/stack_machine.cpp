#include "stagerl/stack_machine.hpp"

#include <cctype>
#include <charconv>

namespace stagerl {

namespace {

std::optional<std::int64_t> parse_int(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

std::optional<std::int64_t> interpret(std::span<const std::string> program, std::int64_t x) {
  std::vector<std::int64_t> stack;
  auto pop = [&](std::int64_t& v) {
    if (stack.empty()) return false;
    v = stack.back();
    stack.pop_back();
    return true;
  };
  for (const std::string& tok : program) {
    if (tok == "x") {
      stack.push_back(x);
    } else if (tok == "dup") {
      if (stack.empty()) return std::nullopt;
      stack.push_back(stack.back());
    } else if (tok == "drop") {
      std::int64_t a;
      if (!pop(a)) return std::nullopt;
    } else if (tok == "swap") {
      if (stack.size() < 2) return std::nullopt;
      std::swap(stack[stack.size() - 1], stack[stack.size() - 2]);
    } else if (tok == "neg") {
      std::int64_t a;
      if (!pop(a) || a == INT64_MIN) return std::nullopt;
      stack.push_back(-a);
    } else if (tok.size() == 1 && std::string_view("+-*/%").find(tok[0]) != std::string_view::npos) {
      std::int64_t b, a, r = 0;
      if (!pop(b) || !pop(a)) return std::nullopt;
      switch (tok[0]) {
        case '+':
          if (__builtin_add_overflow(a, b, &r)) return std::nullopt;
          break;
        case '-':
          if (__builtin_sub_overflow(a, b, &r)) return std::nullopt;
          break;
        case '*':
          if (__builtin_mul_overflow(a, b, &r)) return std::nullopt;
          break;
        case '/':
        case '%':
          if (b == 0 || (a == INT64_MIN && b == -1)) return std::nullopt;
          r = tok[0] == '/' ? a / b : a % b;
          break;
      }
      stack.push_back(r);
    } else if (auto v = parse_int(tok); v && tok.find_first_of(" \t\n") == std::string::npos) {
      stack.push_back(*v);
    } else {
      return std::nullopt;
    }
  }
  if (stack.size() != 1) return std::nullopt;
  return stack.front();
}

std::vector<ExecutionResult> simulate_execution(std::span<const std::string> program, const SyntheticTask& task) {
  std::vector<ExecutionResult> results;
  results.reserve(task.tests.size());
  for (std::size_t i = 0; i < task.tests.size(); ++i) {
    const TestCase& t = task.tests[i];
    ExecutionResult r;
    r.test_index = static_cast<int>(i);
    auto x = parse_int(t.input);
    auto y = x ? interpret(program, *x) : std::nullopt;
    if (!y) {
      r.status = ExecStatus::runtime_error;
      r.detail = x ? "ill-formed program" : "test input is not an integer";
    } else {
      r.stdout_text = std::to_string(*y);
      r.status = normalize_output(r.stdout_text) == normalize_output(t.expected_stdout) ? ExecStatus::passed
                                                                                        : ExecStatus::wrong_output;
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace stagerl
