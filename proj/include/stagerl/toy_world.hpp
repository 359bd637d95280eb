// A synthetic task family small enough to train on a laptop.
//
// Math prompts are "skill_k inst_j" (easy) or "skill_k hard inst_j" (hard);
// a response is some "think" filler, then "\boxed{ <value> }" and the end
// token. Each skill's answer has several equivalent surface forms, so the
// real math verifier decides correctness. Code prompts are "prog_k inst_j";
// a response is a stack-language program judged by the interpreter.
//
// The base policy is fitted by maximum likelihood to demonstrations whose
// per-skill correctness rates are chosen so that three corpora land in
// distinct difficulty regimes:
//   level1  easy prompts of skills 0-3, moderate rates (mean about 0.58)
//   level2  easy prompts of skills 4-7, two nearly solved and two nearly
//           failed (mean about 0.50)
//   level3  hard prompts of skills 0-3, low rates and longer responses
//           (mean about 0.17)
// Training splits use instances 0-5, "_eval" splits the held-out 6-7.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "stagerl/corpus.hpp"
#include "stagerl/eval_harness.hpp"
#include "stagerl/grpo.hpp"
#include "stagerl/rng.hpp"
#include "stagerl/toy_policy.hpp"
#include "stagerl/vocabulary.hpp"

namespace stagerl {

struct ToySkill {
  std::vector<std::string> forms;  // equivalent surface forms of the answer
  double easy_rate = 0;            // demo correctness on easy prompts
  double hard_rate = 0;            // and on hard prompts
};

struct ToyCodeTask {
  std::vector<std::vector<std::string>> correct;      // accepted programs
  std::vector<std::vector<std::string>> distractors;  // wrong or partial
  double rate = 0;
  std::vector<TestCase> tests;
};

struct ToyWorld {
  Vocabulary vocab;
  std::vector<ToySkill> skills;
  std::vector<ToyCodeTask> code_tasks;
  int instances = 8;
  int train_instances = 6;
  // Demo filler lengths, inclusive ranges.
  int easy_think_min = 1, easy_think_max = 3;
  int hard_think_min = 3, hard_think_max = 6;
  // Share of wrong hard-prompt demos that give the next skill's answer.
  double hard_misconception = 0.8;
};

ToyWorld make_toy_world();

/// Named problem sets: level1, level2, level3, code and their "_eval"
/// counterparts.
std::map<std::string, std::vector<Problem>> toy_corpora(const ToyWorld& world);

/// Demonstration response (end token included) for a toy prompt.
std::vector<TokenId> sample_demo(const ToyWorld& world, const Problem& problem, Engine& rng);

struct SftConfig {
  int embed = 32;
  int hidden = 64;
  int steps = 8000;
  int batch = 32;
  double learning_rate = 0.02;
  double init_scale = 0.1;
  std::uint64_t seed = 0;
};

/// Adam on the demo log-likelihood over every toy prompt (all instances).
PolicyParams train_base_policy(const ToyWorld& world, const SftConfig& cfg,
                               const std::function<void(int step, double nll)>& progress = {});

/// RL settings the toy world is tuned for: easy prompts are trained with
/// short rollouts, hard ones with the longer second-stage length.
struct ToyRlSettings {
  GrpoConfig grpo;
  EvalConfig eval;
  int easy_len = 12;
  int hard_len = 16;
  int eval_every = 5;
};

ToyRlSettings toy_rl_settings();

}  // namespace stagerl
