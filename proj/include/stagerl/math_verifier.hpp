// Final-answer extraction and binary correctness for math responses.
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "stagerl/math_expr.hpp"

namespace stagerl {

/// The ground truth itself could not be parsed. This is a configuration
/// problem, not a model failure, and is never folded into a 0 score.
class VerifierConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Content of the last balanced \boxed{...} in `text`, or nullopt.
std::optional<std::string> extract_boxed(std::string_view text);

inline constexpr double kNumericRelTolerance = 1e-9;

/// Canonical identity, or (for symbol-free expressions) numeric agreement
/// within kNumericRelTolerance relative.
bool check_equivalent(const math::MathExpr& a, const math::MathExpr& b);

/// 1 when the last boxed answer is equivalent to the ground truth, else 0.
/// Missing boxes, unparseable answers and undefined values all score 0.
/// Throws VerifierConfigError when `ground_truth` does not parse.
double score_math(std::string_view response_text, std::string_view ground_truth);

/// Pre-parsed ground truth for scoring many responses against one answer.
class MathAnswerKey {
 public:
  explicit MathAnswerKey(std::string_view ground_truth);
  double score(std::string_view response_text) const;
  const math::MathExpr& expr() const { return expr_; }

 private:
  math::MathExpr expr_;
};

}  // namespace stagerl
