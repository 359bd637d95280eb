// Deterministic interpreter for a tiny postfix language, used to judge
// synthetic code tasks without spawning processes.
//
// Each test's stdin holds one integer x. Tokens: "x" pushes x, integer
// literals push themselves, "+ - * / %" pop two and push the result,
// "neg" "dup" "swap" "drop" do the obvious thing. The program must leave
// exactly one value, which is printed as the program's output. Anything
// else (unknown token, stack underflow, division by zero, overflow) is a
// runtime error.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stagerl/code_judge.hpp"
#include "stagerl/corpus.hpp"

namespace stagerl {

struct SyntheticTask {
  std::string name;
  std::vector<TestCase> tests;
};

/// Output of the program on input x, or nullopt on a runtime error.
std::optional<std::int64_t> interpret(std::span<const std::string> program, std::int64_t x);

std::vector<ExecutionResult> simulate_execution(std::span<const std::string> program, const SyntheticTask& task);

}  // namespace stagerl
