#include "stagerl/toy_world.hpp"

#include <cmath>
#include <set>

#include "stagerl/reward.hpp"
#include "stagerl/stack_machine.hpp"

namespace stagerl {

namespace {

constexpr const char* kThink = "think";
constexpr const char* kBoxOpen = "\\boxed{";
constexpr const char* kBoxClose = "}";
constexpr const char* kHard = "hard";

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = s.find(' ', i);
    if (j == std::string_view::npos) j = s.size();
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

ToyCodeTask code_task(std::vector<std::string> correct, std::vector<std::string> distractors, double rate) {
  ToyCodeTask t;
  for (const auto& c : correct) t.correct.push_back(words(c));
  for (const auto& d : distractors) t.distractors.push_back(words(d));
  t.rate = rate;
  for (int x = 1; x <= 4; ++x) {
    auto y = interpret(t.correct.front(), x);
    t.tests.push_back({std::to_string(x), std::to_string(*y), 1000, 64});
  }
  return t;
}

int skill_of(const Problem& p) { return std::stoi(p.meta.at("skill")); }

}  // namespace

ToyWorld make_toy_world() {
  ToyWorld w;
  w.skills = {
      {{"2", "4/2", "2.0"}, 0.45, 0.0},
      {{"1/2", "0.5", "\\frac{1}{2}"}, 0.55, 0.0},
      {{"3", "6/2", "3.0"}, 0.60, 0.0},
      {{"x+1", "1+x"}, 0.70, 0.45},
      {{"2x", "x+x", "2*x"}, 0.85, 0.10},
      {{"\\sqrt{2}", "2^{1/2}"}, 0.75, 0.10},
      {{"1/4", "0.25", "\\frac{2}{8}"}, 0.25, 0.05},
      {{"-1", "-2/2"}, 0.15, 0.05},
  };
  w.code_tasks = {
      code_task({"x 1 +", "1 x +"}, {"x", "x 2 +", "x 1 + x 2 % +", "x 2 *"}, 0.6),
      code_task({"x 2 *", "x x +"}, {"x 1 +", "x dup *", "x 2 +"}, 0.5),
      code_task({"x dup *"}, {"x 2 *", "x", "x 1 +"}, 0.4),
      code_task({"x 2 %"}, {"x 1 -", "x", "x 2 *"}, 0.3),
  };

  std::vector<std::string> vocab = {"<eos>", kThink, kBoxOpen, kBoxClose, kHard};
  std::set<std::string> seen(vocab.begin(), vocab.end());
  auto add = [&](const std::string& word) {
    if (seen.insert(word).second) vocab.push_back(word);
  };
  for (std::size_t k = 0; k < w.skills.size(); ++k) add("skill_" + std::to_string(k));
  for (std::size_t k = 0; k < w.code_tasks.size(); ++k) add("prog_" + std::to_string(k));
  for (int j = 0; j < w.instances; ++j) add("inst_" + std::to_string(j));
  for (const auto& s : w.skills) {
    for (const auto& f : s.forms) add(f);
  }
  for (const char* op : {"x", "1", "2", "3", "+", "-", "*", "%", "dup", "neg"}) add(op);
  for (const auto& t : w.code_tasks) {
    for (const auto& prog : t.correct) {
      for (const auto& tok : prog) add(tok);
    }
    for (const auto& prog : t.distractors) {
      for (const auto& tok : prog) add(tok);
    }
  }
  w.vocab = Vocabulary(vocab);
  return w;
}

std::map<std::string, std::vector<Problem>> toy_corpora(const ToyWorld& world) {
  std::map<std::string, std::vector<Problem>> out;
  auto math = [&](const std::string& corpus, int skill, bool hard) {
    for (int j = 0; j < world.instances; ++j) {
      Problem p;
      p.id = corpus + "-s" + std::to_string(skill) + "-i" + std::to_string(j);
      p.domain = Domain::math;
      p.prompt = "skill_" + std::to_string(skill) + (hard ? " hard" : "") + " inst_" + std::to_string(j);
      p.answer = world.skills[skill].forms.front();
      p.meta = {{"skill", std::to_string(skill)}, {"variant", hard ? "hard" : "easy"}};
      const bool eval = j >= world.train_instances;
      out[eval ? corpus + "_eval" : corpus].push_back(std::move(p));
    }
  };
  for (int k = 0; k < 4; ++k) math("level1", k, false);
  for (int k = 4; k < 8; ++k) math("level2", k, false);
  for (int k = 0; k < 4; ++k) math("level3", k, true);
  for (std::size_t k = 0; k < world.code_tasks.size(); ++k) {
    for (int j = 0; j < world.instances; ++j) {
      Problem p;
      p.id = "code-p" + std::to_string(k) + "-i" + std::to_string(j);
      p.domain = Domain::code;
      p.prompt = "prog_" + std::to_string(k) + " inst_" + std::to_string(j);
      p.tests = world.code_tasks[k].tests;
      p.meta = {{"task", std::to_string(k)}, {std::string(kExecutorKey), std::string(kStackExecutor)}};
      out[j >= world.train_instances ? "code_eval" : "code"].push_back(std::move(p));
    }
  }
  return out;
}

std::vector<TokenId> sample_demo(const ToyWorld& world, const Problem& problem, Engine& rng) {
  const Vocabulary& v = world.vocab;
  std::vector<TokenId> out;
  auto pick = [&](const auto& list) -> const auto& { return list[uniform_index(rng, list.size())]; };
  if (problem.domain == Domain::code) {
    const ToyCodeTask& task = world.code_tasks.at(std::stoul(problem.meta.at("task")));
    const auto& prog = u01(rng) < task.rate ? pick(task.correct) : pick(task.distractors);
    for (const auto& tok : prog) out.push_back(v.id(tok));
  } else {
    const int skill = skill_of(problem);
    const bool hard = problem.meta.at("variant") == "hard";
    const int lo = hard ? world.hard_think_min : world.easy_think_min;
    const int hi = hard ? world.hard_think_max : world.easy_think_max;
    const int think = lo + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(hi - lo + 1)));
    for (int i = 0; i < think; ++i) out.push_back(v.id(kThink));
    out.push_back(v.id(kBoxOpen));
    const ToySkill& s = world.skills.at(skill);
    const double rate = hard ? s.hard_rate : s.easy_rate;
    if (u01(rng) < rate) {
      out.push_back(v.id(pick(s.forms)));
    } else if (hard && u01(rng) < world.hard_misconception) {
      // Hard prompts mostly draw the same wrong answer: the next skill's.
      const ToySkill& next = world.skills.at((skill + 1) % world.skills.size());
      out.push_back(v.id(next.forms.front()));
    } else {
      std::vector<std::string> wrong;
      for (std::size_t k = 0; k < world.skills.size(); ++k) {
        if (static_cast<int>(k) == skill) continue;
        wrong.insert(wrong.end(), world.skills[k].forms.begin(), world.skills[k].forms.end());
      }
      out.push_back(v.id(pick(wrong)));
    }
    out.push_back(v.id(kBoxClose));
  }
  out.push_back(v.end_token());
  return out;
}

PolicyParams train_base_policy(const ToyWorld& world, const SftConfig& cfg,
                               const std::function<void(int, double)>& progress) {
  // Every prompt the world can produce, all instances included.
  std::vector<Problem> prompts;
  for (auto& [name, problems] : toy_corpora(world)) {
    prompts.insert(prompts.end(), problems.begin(), problems.end());
  }
  const PolicyShape shape{static_cast<int>(world.vocab.size()), cfg.embed, cfg.hidden};
  PolicyParams params = PolicyParams::random(shape, cfg.seed, cfg.init_scale);
  std::vector<double> m(params.size(), 0.0), v(params.size(), 0.0);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Engine rng(stream_seed(cfg.seed, {0x5F7}));
  for (int step = 1; step <= cfg.steps; ++step) {
    PolicyParams grad(shape);
    double nll = 0;
    for (int b = 0; b < cfg.batch; ++b) {
      const Problem& p = prompts[uniform_index(rng, prompts.size())];
      const auto prompt = world.vocab.encode(p.prompt);
      const auto demo = sample_demo(world, p, rng);
      grad.axpy(1.0, grad_logprob(params, prompt, demo));
      nll -= sequence_logprob(params, prompt, demo);
    }
    // Ascend the average log-likelihood.
    const double scale = 1.0 / cfg.batch;
    const double c1 = 1 - std::pow(beta1, step), c2 = 1 - std::pow(beta2, step);
    // Linear decay to 10% of the initial rate.
    const double lr = cfg.learning_rate * (1.0 - 0.9 * (step - 1) / std::max(1, cfg.steps - 1));
    auto& theta = params.values();
    const auto& g = grad.values();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double gi = -g[i] * scale;
      m[i] = beta1 * m[i] + (1 - beta1) * gi;
      v[i] = beta2 * v[i] + (1 - beta2) * gi * gi;
      theta[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
    if (progress) progress(step, nll / cfg.batch);
  }
  return params;
}

ToyRlSettings toy_rl_settings() {
  ToyRlSettings s;
  s.grpo.group_size = 8;
  s.grpo.batch_size = 16;
  s.grpo.learning_rate = 0.1;
  s.eval = EvalConfig{8, 0.6, 0.95, 16, 99};
  return s;
}

}  // namespace stagerl
