// Scores a response to a problem with the verifier matching its domain.
#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>

#include "stagerl/code_judge.hpp"
#include "stagerl/corpus.hpp"
#include "stagerl/math_verifier.hpp"

namespace stagerl {

/// Problems whose meta has executor=stack are judged by the stack-language
/// interpreter (the response text is the program, one word per token);
/// other code problems run through the process judge.
inline constexpr std::string_view kExecutorKey = "executor";
inline constexpr std::string_view kStackExecutor = "stack";

class Rewarder {
 public:
  explicit Rewarder(JudgeConfig judge = {});

  /// Math: score_math. Code: score_code over the problem's tests. Throws
  /// VerifierConfigError when the problem itself is unusable (bad ground
  /// truth, missing answer or tests). Safe to call concurrently.
  double score(const Problem& p, std::string_view response);

  const JudgeConfig& judge_config() const { return judge_; }

 private:
  const MathAnswerKey& answer_key(const Problem& p);

  JudgeConfig judge_;
  std::mutex mu_;
  std::map<std::string, std::unique_ptr<MathAnswerKey>> keys_;
  std::map<std::pair<std::string, std::string>, double> cache_;
};

}  // namespace stagerl
