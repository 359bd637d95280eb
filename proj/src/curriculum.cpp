#include "stagerl/curriculum.hpp"

#include <fstream>
#include <stdexcept>

namespace stagerl {

StageConfig long_context_preset(StageConfig base, int max_rollout_len) {
  if (max_rollout_len <= base.max_rollout_len) {
    throw std::invalid_argument("long-context preset needs a longer max_rollout_len than the base stage");
  }
  base.max_rollout_len = max_rollout_len;
  base.entropy_enabled = false;
  base.exclude_truncated_from_loss = true;
  return base;
}

void validate(const StageConfig& stage) {
  if (stage.mix.empty()) throw std::invalid_argument("stage '" + stage.name + "': empty mix");
  for (const auto& c : stage.mix) {
    if (!(c.weight > 0)) throw std::invalid_argument("stage '" + stage.name + "': weights must be positive");
    if (c.problems.empty()) throw std::invalid_argument("stage '" + stage.name + "': pool '" + c.name + "' is empty");
  }
  if (stage.max_rollout_len < 1) throw std::invalid_argument("stage '" + stage.name + "': max_rollout_len < 1");
  if (stage.steps_max < 0) throw std::invalid_argument("stage '" + stage.name + "': steps_max < 0");
  if (stage.plateau) validate(*stage.plateau);
}

namespace {

constexpr std::uint64_t kComposerStream = 0xBA7C;

double eval_score(const PolicyParams& params, const Vocabulary& vocab, Rewarder& rewarder,
                  const TrainerOptions& opts) {
  return evaluate(params, vocab, opts.eval_problems, rewarder, opts.eval, "train-eval").pass_at_1;
}

}  // namespace

TrainResult run_stage(const PolicyParams& params, const StageConfig& stage, int stage_index, int first_step,
                      const Vocabulary& vocab, Rewarder& rewarder, const TrainerOptions& opts) {
  validate(stage);
  validate(opts.grpo);
  if (static_cast<std::size_t>(params.shape().vocab) != vocab.size()) {
    throw std::invalid_argument("policy vocabulary size does not match the vocabulary");
  }
  GrpoConfig grpo = opts.grpo;
  grpo.exclude_truncated_from_loss = stage.exclude_truncated_from_loss;
  if (!stage.entropy_enabled) grpo.entropy_coef = 0;

  TrainResult result{params, {}};
  const PolicyParams reference = params;
  BatchComposer composer(stage.mix, stream_seed(opts.seed, {kComposerStream, static_cast<std::uint64_t>(stage_index)}));
  const bool has_eval = !opts.eval_problems.empty() && opts.eval_every > 0;
  std::vector<double> history;

  for (int k = 0; k < stage.steps_max; ++k) {
    const int step = first_step + k + 1;
    const std::vector<Problem> batch = composer.next(grpo.batch_size);
    std::vector<RolloutGroup> groups;
    StepRecord rec;
    rec.step = step;
    rec.stage = stage_index;
    rec.stage_name = stage.name;
    double reward_sum = 0, length_sum = 0;
    int truncated = 0, total = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const Problem& problem = batch[i];
      std::vector<TokenId> prompt = vocab.encode(problem.prompt);
      std::vector<Rollout> rollouts;
      std::vector<double> rewards;
      for (int j = 0; j < grpo.group_size; ++j) {
        SamplerConfig s = opts.sampler;
        s.max_len = stage.max_rollout_len;
        s.end_token = vocab.end_token();
        s.seed = stream_seed(opts.seed, {static_cast<std::uint64_t>(step), i, static_cast<std::uint64_t>(j)});
        Rollout r = sample(result.params, s, prompt);
        r.problem_id = problem.id;
        r.model_id = "policy";
        r.attempt = j;
        r.text = vocab.decode(*r.token_ids);
        double reward = 0;
        try {
          reward = rewarder.score(problem, r.text);
        } catch (const std::exception&) {
          ++rec.reward_failures;
        }
        reward_sum += reward;
        length_sum += static_cast<double>(r.token_ids->size());
        truncated += r.truncated;
        ++total;
        rewards.push_back(reward);
        rollouts.push_back(std::move(r));
      }
      groups.push_back(make_group(problem.id, std::move(prompt), std::move(rollouts), std::move(rewards), grpo));
    }
    LossAndGrad lg = grpo_loss_and_grad(result.params, reference, groups, grpo);
    result.params.axpy(-grpo.learning_rate, lg.grad);
    if (!result.params.all_finite()) {
      throw std::runtime_error("training diverged at step " + std::to_string(step) + " (non-finite parameters)");
    }
    rec.mean_reward = reward_sum / total;
    rec.mean_length = length_sum / total;
    rec.truncation_fraction = static_cast<double>(truncated) / total;
    rec.loss = lg.terms.loss;
    rec.kl_term = lg.terms.kl_term;
    rec.entropy_term = lg.terms.entropy_term;

    bool stop = false;
    const bool last = k + 1 == stage.steps_max;
    if (has_eval && (step % opts.eval_every == 0 || last)) {
      rec.eval_score = eval_score(result.params, vocab, rewarder, opts);
      history.push_back(*rec.eval_score);
      stop = stage.plateau && detect_plateau(history, *stage.plateau);
    }
    result.log.steps.push_back(rec);
    if (opts.on_step) opts.on_step(rec);
    if (stop) {
      result.log.transitions.push_back({step, stage_index, stage_index + 1, "plateau"});
      break;
    }
  }
  if (result.log.transitions.empty()) {
    result.log.transitions.push_back({first_step + static_cast<int>(result.log.steps.size()), stage_index,
                                      stage_index + 1, "steps_max"});
  }
  return result;
}

TrainResult run_staged(const PolicyParams& params, std::span<const StageConfig> stages, const Vocabulary& vocab,
                       Rewarder& rewarder, const TrainerOptions& opts) {
  if (stages.empty()) throw std::invalid_argument("run_staged: no stages");
  for (const auto& s : stages) validate(s);
  TrainResult out{params, {}};
  if (!opts.eval_problems.empty() && opts.eval_every > 0) {
    out.log.initial_eval = eval_score(params, vocab, rewarder, opts);
  }
  int step = 0;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    StageConfig stage = stages[i];
    const bool last = i + 1 == stages.size();
    if (last && opts.total_steps) stage.steps_max = std::max(0, *opts.total_steps - step);
    TrainResult r = run_stage(out.params, stage, static_cast<int>(i), step, vocab, rewarder, opts);
    out.params = std::move(r.params);
    step += static_cast<int>(r.log.steps.size());
    out.log.steps.insert(out.log.steps.end(), r.log.steps.begin(), r.log.steps.end());
    // The boundary after the final stage is not a transition.
    if (!last) out.log.transitions.push_back(r.log.transitions.front());
  }
  return out;
}

void to_json(nlohmann::json& j, const StepRecord& r) {
  j = {{"step", r.step},
       {"stage", r.stage},
       {"stage_name", r.stage_name},
       {"mean_reward", r.mean_reward},
       {"mean_length", r.mean_length},
       {"truncation_fraction", r.truncation_fraction},
       {"loss", r.loss},
       {"kl_term", r.kl_term},
       {"entropy_term", r.entropy_term},
       {"reward_failures", r.reward_failures}};
  if (r.eval_score) j["eval_score"] = *r.eval_score;
}

void from_json(const nlohmann::json& j, StepRecord& r) {
  r.step = j.at("step").get<int>();
  r.stage = j.at("stage").get<int>();
  r.stage_name = j.at("stage_name").get<std::string>();
  r.mean_reward = j.at("mean_reward").get<double>();
  r.mean_length = j.at("mean_length").get<double>();
  r.truncation_fraction = j.at("truncation_fraction").get<double>();
  r.loss = j.at("loss").get<double>();
  r.kl_term = j.at("kl_term").get<double>();
  r.entropy_term = j.at("entropy_term").get<double>();
  r.reward_failures = j.value("reward_failures", 0);
  r.eval_score.reset();
  if (j.contains("eval_score")) r.eval_score = j.at("eval_score").get<double>();
}

void to_json(nlohmann::json& j, const StageTransition& t) {
  j = {{"step", t.step}, {"from_stage", t.from_stage}, {"to_stage", t.to_stage}, {"reason", t.reason}};
}

void from_json(const nlohmann::json& j, StageTransition& t) {
  t.step = j.at("step").get<int>();
  t.from_stage = j.at("from_stage").get<int>();
  t.to_stage = j.at("to_stage").get<int>();
  t.reason = j.at("reason").get<std::string>();
}

void write_train_log(const std::filesystem::path& path, const TrainLog& log) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (log.initial_eval) out << nlohmann::json{{"type", "initial_eval"}, {"eval_score", *log.initial_eval}}.dump() << '\n';
  // Transitions are emitted right after the step they follow.
  std::size_t ti = 0;
  for (const auto& s : log.steps) {
    nlohmann::json j = s;
    j["type"] = "step";
    out << j.dump() << '\n';
    for (; ti < log.transitions.size() && log.transitions[ti].step == s.step; ++ti) {
      nlohmann::json t = log.transitions[ti];
      t["type"] = "transition";
      out << t.dump() << '\n';
    }
  }
  for (; ti < log.transitions.size(); ++ti) {
    nlohmann::json t = log.transitions[ti];
    t["type"] = "transition";
    out << t.dump() << '\n';
  }
  if (!out) throw std::runtime_error("error writing " + path.string());
}

TrainLog read_train_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  TrainLog log;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "step") {
        log.steps.push_back(j.get<StepRecord>());
      } else if (type == "transition") {
        log.transitions.push_back(j.get<StageTransition>());
      } else if (type == "initial_eval") {
        log.initial_eval = j.at("eval_score").get<double>();
      } else {
        throw std::runtime_error("unknown record type '" + type + "'");
      }
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return log;
}

}  // namespace stagerl
