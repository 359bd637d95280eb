#include <doctest.h>

#include "oracles.hpp"
#include "stagerl/math_verifier.hpp"
#include "stagerl/rng.hpp"

using namespace stagerl;

namespace {

// Scan oracle: collect every balanced \boxed{...} occurrence left to right
// and return the last one.
std::optional<std::string> last_boxed_by_scan(const std::string& s) {
  const std::string open = "\\boxed{";
  std::optional<std::string> last;
  for (std::size_t pos = s.find(open); pos != std::string::npos; pos = s.find(open, pos + 1)) {
    int depth = 1;
    std::size_t i = pos + open.size();
    for (; i < s.size() && depth > 0; ++i) depth += s[i] == '{' ? 1 : (s[i] == '}' ? -1 : 0);
    if (depth == 0) last = s.substr(pos + open.size(), i - 1 - pos - open.size());
  }
  return last;
}

std::string random_answer(Engine& e) {
  static const char* atoms[] = {"1", "2", "x", "y", "\\frac{1}{2}", "0.5", "\\sqrt{2}", "\\pi", "3", "0.25"};
  std::string s = atoms[uniform_index(e, 10)];
  const auto n = uniform_index(e, 3);
  for (std::size_t i = 0; i < n; ++i) {
    static const char* ops[] = {"+", "-", "*", "\\cdot "};
    s += ops[uniform_index(e, 4)];
    s += atoms[uniform_index(e, 10)];
  }
  return s;
}

}  // namespace

TEST_CASE("curated response/answer pairs") {
  const auto cases = oracle::read_jsonl(STAGERL_TEST_DATA "/math_cases.jsonl");
  REQUIRE(cases.size() >= 60);
  for (const auto& c : cases) {
    const std::string response = c.at("response"), truth = c.at("truth");
    INFO(response << " | " << truth);
    CHECK(score_math(response, truth) == c.at("score").get<double>());
  }
}

TEST_CASE("extract_boxed") {
  CHECK(extract_boxed("so \\boxed{42}.") == "42");
  CHECK(extract_boxed("\\boxed{\\frac{1}{2}} ... \\boxed{x^2}") == "x^2");
  CHECK_FALSE(extract_boxed("no box here").has_value());
  CHECK_FALSE(extract_boxed("\\boxed{1").has_value());
  CHECK(extract_boxed("\\boxed{a{b}c}") == "a{b}c");
}

TEST_CASE("extract_boxed agrees with the scan oracle") {
  Engine e(31);
  static const char* pieces[] = {"\\boxed{", "{", "}", "x", " ", "1", "\\frac", "boxed{"};
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    const auto n = uniform_index(e, 12);
    for (std::size_t k = 0; k < n; ++k) s += pieces[uniform_index(e, 8)];
    INFO(s);
    CHECK(extract_boxed(s) == last_boxed_by_scan(s));
  }
}

TEST_CASE("score_math cases") {
  CHECK(score_math("... \\boxed{42}", "42") == 1);
  CHECK(score_math("no final answer given", "42") == 0);
  CHECK(score_math("... \\boxed{41}", "42") == 0);
}

TEST_CASE("unparseable ground truth is a configuration error") {
  CHECK_THROWS_AS(score_math("\\boxed{1}", "(("), VerifierConfigError);
  CHECK_THROWS_AS(MathAnswerKey("\\boxed{"), VerifierConfigError);
}

TEST_CASE("numeric fallback uses a 1e-9 relative tolerance") {
  CHECK(check_equivalent(math::parse_math("\\pi"), math::parse_math("3.14159265358979323846")));
  CHECK_FALSE(check_equivalent(math::parse_math("\\pi"), math::parse_math("3.14159265")));
  CHECK(check_equivalent(math::parse_math("1/3"), math::parse_math("0.3333333333333333")));
  // Free symbols compare structurally only.
  CHECK_FALSE(check_equivalent(math::parse_math("x"), math::parse_math("x+0.0000000000001")));
}

TEST_CASE("equivalence is reflexive and symmetric; scores are binary") {
  Engine e(8);
  for (int i = 0; i < 400; ++i) {
    const std::string a = random_answer(e), b = random_answer(e);
    INFO(a << " vs " << b);
    const auto ea = math::parse_math(a), eb = math::parse_math(b);
    CHECK(check_equivalent(ea, ea));
    CHECK(check_equivalent(ea, eb) == check_equivalent(eb, ea));
    const double s = score_math("\\boxed{" + a + "}", b);
    CHECK((s == 0.0 || s == 1.0));
    CHECK(score_math("\\boxed{" + a + "}", a) == 1.0);
  }
}

TEST_CASE("answer key matches score_math") {
  MathAnswerKey key("\\frac{3}{4}");
  CHECK(key.score("\\boxed{0.75}") == 1);
  CHECK(key.score("\\boxed{3/5}") == 0);
  CHECK(key.score("0.75") == 0);
}
