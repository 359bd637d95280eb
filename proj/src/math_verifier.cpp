#include "stagerl/math_verifier.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace stagerl {

namespace {

constexpr std::string_view kBoxed = "\\boxed";

// Index one past the brace closing the group that opens at `open`, or npos.
// Escaped braces (\{ and \}) do not count toward nesting.
std::size_t match_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    char c = s[i];
    if (c == '\\' && i + 1 < s.size() && (s[i + 1] == '{' || s[i + 1] == '}')) {
      ++i;
      continue;
    }
    if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

}  // namespace

std::optional<std::string> extract_boxed(std::string_view text) {
  std::size_t pos = text.rfind(kBoxed);
  while (pos != std::string_view::npos) {
    std::size_t i = pos + kBoxed.size();
    // \boxedfoo is a different control word.
    bool word_ends = i >= text.size() || !std::isalpha(static_cast<unsigned char>(text[i]));
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (word_ends && i < text.size() && text[i] == '{') {
      std::size_t end = match_brace(text, i);
      if (end != std::string_view::npos) return std::string(text.substr(i + 1, end - i - 2));
    }
    if (pos == 0) break;
    pos = text.rfind(kBoxed, pos - 1);
  }
  return std::nullopt;
}

bool check_equivalent(const math::MathExpr& a, const math::MathExpr& b) {
  if (a == b) return true;
  if (math::has_free_symbols(a) || math::has_free_symbols(b)) return false;
  auto va = math::evaluate(a);
  auto vb = math::evaluate(b);
  if (!va || !vb) return false;
  double scale = std::max(std::abs(*va), std::abs(*vb));
  return std::abs(*va - *vb) <= kNumericRelTolerance * scale;
}

MathAnswerKey::MathAnswerKey(std::string_view ground_truth) {
  try {
    expr_ = math::parse_math(ground_truth);
  } catch (const math::MathError& e) {
    throw VerifierConfigError("ground truth '" + std::string(ground_truth) + "' is not parseable: " + e.what());
  }
}

double MathAnswerKey::score(std::string_view response_text) const {
  auto boxed = extract_boxed(response_text);
  if (!boxed) return 0.0;
  try {
    return check_equivalent(math::parse_math(*boxed), expr_) ? 1.0 : 0.0;
  } catch (const math::MathError&) {
    return 0.0;
  }
}

double score_math(std::string_view response_text, std::string_view ground_truth) {
  return MathAnswerKey(ground_truth).score(response_text);
}

}  // namespace stagerl
