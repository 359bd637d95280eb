#include "stagerl/reward.hpp"

#include <sstream>

#include "stagerl/stack_machine.hpp"

namespace stagerl {

Rewarder::Rewarder(JudgeConfig judge) : judge_(std::move(judge)) { validate(judge_); }

const MathAnswerKey& Rewarder::answer_key(const Problem& p) {
  auto it = keys_.find(p.id);
  if (it != keys_.end()) return *it->second;
  if (!p.answer) throw VerifierConfigError("math problem '" + p.id + "' has no answer");
  auto key = std::make_unique<MathAnswerKey>(*p.answer);
  return *keys_.emplace(p.id, std::move(key)).first->second;
}

double Rewarder::score(const Problem& p, std::string_view response) {
  std::pair<std::string, std::string> cache_key{p.id, std::string(response)};
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(cache_key); it != cache_.end()) return it->second;
  }
  double s = 0;
  if (p.domain == Domain::math) {
    std::lock_guard lock(mu_);
    s = answer_key(p).score(response);
    cache_.emplace(std::move(cache_key), s);
    return s;
  }
  if (!p.tests || p.tests->empty()) throw VerifierConfigError("code problem '" + p.id + "' has no tests");
  auto exec = p.meta.find(std::string(kExecutorKey));
  if (exec != p.meta.end() && exec->second == kStackExecutor) {
    std::vector<std::string> program;
    std::istringstream in{std::string(response)};
    for (std::string w; in >> w;) program.push_back(w);
    s = score_code(simulate_execution(program, SyntheticTask{p.id, *p.tests}));
  } else {
    s = score_code(run_tests(response, *p.tests, judge_));
  }
  std::lock_guard lock(mu_);
  cache_.emplace(std::move(cache_key), s);
  return s;
}

}  // namespace stagerl
