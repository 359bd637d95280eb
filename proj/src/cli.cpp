#include "stagerl/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "stagerl/corpus.hpp"
#include "stagerl/difficulty.hpp"
#include "stagerl/eval_harness.hpp"
#include "stagerl/pipeline_config.hpp"
#include "stagerl/reward.hpp"
#include "stagerl/toy_policy.hpp"
#include "stagerl/toy_world.hpp"
#include "stagerl/vocabulary.hpp"

namespace stagerl {

namespace fs = std::filesystem;

namespace {

// Bad flags, bad config or missing inputs: exit 2 before doing any work.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Common {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "pipeline config (JSON)");
  cmd->add_option("--out", c.out, "output path");
  c.seed_opt = cmd->add_option("--seed", c.seed, "random seed (overrides the config)");
}

PipelineConfig load(const Common& c) {
  if (c.config.empty()) return {};
  if (!fs::exists(c.config)) throw UsageError("config file not found: " + c.config);
  try {
    PipelineConfig cfg = load_config(c.config);
    resolve_paths(cfg, fs::path(c.config).parent_path());
    return cfg;
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
}

std::uint64_t seed_of(const Common& c, std::uint64_t fallback) { return c.seed_opt->count() ? c.seed : fallback; }

// First non-empty candidate.
std::string pick(std::initializer_list<std::string> candidates) {
  for (const auto& s : candidates) {
    if (!s.empty()) return s;
  }
  return {};
}

// dir/name, or empty when dir is.
std::string under(const std::string& dir, const std::string& name) {
  return dir.empty() ? std::string() : (fs::path(dir) / name).string();
}

std::string require_input(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError("no " + what + " given");
  if (!fs::is_regular_file(path)) throw UsageError(what + " not found: " + path);
  return path;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

// ---- score ----

int cmd_score(const Common& c, const std::string& problems_flag, const std::string& rollouts_flag,
              std::ostream& out, std::ostream& err) {
  const PipelineConfig cfg = load(c);
  const std::string problems_path = require_input(pick({problems_flag, cfg.paths.corpus}), "problems file");
  const std::string rollouts_path = require_input(pick({rollouts_flag, cfg.paths.rollouts}), "rollouts file");
  const fs::path out_path = pick({c.out, cfg.paths.scores, "scores.jsonl"});

  std::map<std::string, Problem> problems;
  for (auto& p : read_corpus(problems_path)) problems.emplace(p.id, std::move(p));
  const std::vector<Rollout> rollouts = read_rollouts(rollouts_path);

  Rewarder rewarder(cfg.judge);
  std::vector<ScoreRecord> scores;
  int passed = 0, unscored = 0;
  for (const auto& r : rollouts) {
    auto it = problems.find(r.problem_id);
    if (it == problems.end()) {
      err << "warning: rollout for unknown problem '" << r.problem_id << "' skipped\n";
      ++unscored;
      continue;
    }
    try {
      const double s = rewarder.score(it->second, r.text);
      scores.push_back({r.problem_id, r.model_id, r.attempt, s, counts_as_pass(s)});
      passed += counts_as_pass(s);
    } catch (const std::exception& e) {
      err << "warning: cannot score " << r.problem_id << " (" << r.model_id << " #" << r.attempt << "): " << e.what()
          << "\n";
      ++unscored;
    }
  }
  ensure_parent(out_path);
  write_records(out_path, scores);
  out << "scored " << scores.size() << " of " << rollouts.size() << " rollouts: " << passed << " passed, "
      << unscored << " unscored -> " << out_path.string() << "\n";
  return kExitOk;
}

// ---- bucket ----

int cmd_bucket(const Common& c, const std::string& scores_flag, const std::string& problems_flag,
               const std::string& default_domain, bool level2_on_overlap, std::ostream& out) {
  const PipelineConfig cfg = load(c);
  const std::string scores_path = require_input(pick({scores_flag, cfg.paths.scores}), "scores file");
  const std::string problems_path = pick({problems_flag, cfg.paths.corpus});
  if (!problems_path.empty()) require_input(problems_path, "problems file");
  Domain fallback;
  try {
    fallback = parse_domain(default_domain);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  const fs::path out_path = pick({c.out, cfg.paths.buckets, "buckets.jsonl"});

  std::map<std::string, Domain> domains;
  if (!problems_path.empty()) {
    for (const auto& p : read_corpus(problems_path)) domains[p.id] = p.domain;
  }
  const auto scores = read_scores(scores_path);
  const auto tables = aggregate_pass_rates(scores, default_tier_map());
  LevelRules rules;
  rules.level1_wins_overlap = !level2_on_overlap;
  const auto buckets = bucket_problems(tables, domains, fallback, seed_of(c, cfg.seed), rules);
  ensure_parent(out_path);
  write_records(out_path, buckets);

  std::map<Level, int> counts;
  for (const auto& b : buckets) ++counts[b.level];
  out << "bucketed " << buckets.size() << " problems:";
  for (const auto& [level, n] : counts) out << " " << to_string(level) << "=" << n;
  out << " -> " << out_path.string() << "\n";
  return kExitOk;
}

// ---- train ----

int cmd_train(const Common& c, const std::string& checkpoint_flag, const std::string& log_flag, std::ostream& out) {
  if (c.config.empty()) throw UsageError("train needs --config");
  const PipelineConfig cfg = load(c);
  if (cfg.stages.empty()) throw UsageError("config has no stages");
  const std::string ckpt_path = require_input(checkpoint_flag, "checkpoint");
  for (const auto& s : cfg.stages) {
    for (const auto& m : s.mix) require_input(m.path, "problems file for stage '" + s.name + "'");
  }
  if (!cfg.trainer.eval_problems.empty()) require_input(cfg.trainer.eval_problems, "eval problems file");
  const fs::path out_path = pick({c.out, under(cfg.paths.checkpoints, "policy.ckpt"), "policy.ckpt"});
  fs::path log_path = log_flag.empty() ? fs::path(out_path).replace_extension(".log.jsonl") : fs::path(log_flag);

  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  if (ckpt.vocab.empty()) throw UsageError("checkpoint " + ckpt_path + " has no vocabulary");
  const Vocabulary vocab(ckpt.vocab);

  std::vector<StageConfig> stages;
  for (const auto& s : cfg.stages) stages.push_back(materialize(s));
  TrainerOptions opts;
  opts.grpo = cfg.grpo;
  opts.sampler.temperature = cfg.trainer.temperature;
  opts.sampler.top_p = cfg.trainer.top_p;
  opts.seed = seed_of(c, cfg.seed);
  if (!cfg.trainer.eval_problems.empty()) opts.eval_problems = read_corpus(cfg.trainer.eval_problems);
  opts.eval = cfg.eval;
  opts.eval_every = cfg.trainer.eval_every;
  opts.total_steps = cfg.trainer.total_steps;
  opts.on_step = [&](const StepRecord& r) {
    if (!r.eval_score) return;
    out << "step " << r.step << " [" << r.stage_name << "] reward " << fixed2(r.mean_reward) << " eval "
        << fixed2(*r.eval_score) << "\n";
  };

  Rewarder rewarder(cfg.judge);
  const TrainResult result = run_staged(ckpt.params, stages, vocab, rewarder, opts);
  ensure_parent(out_path);
  ensure_parent(log_path);
  save_checkpoint(out_path, {result.params, ckpt.vocab});
  write_train_log(log_path, result.log);
  out << "trained " << result.log.steps.size() << " steps, " << result.log.transitions.size()
      << " stage transition(s) -> " << out_path.string() << ", " << log_path.string() << "\n";
  return kExitOk;
}

// ---- eval ----

int cmd_eval(const Common& c, const std::string& checkpoint_flag, const std::string& problems_flag,
             std::optional<int> runs, const std::string& benchmark_flag, std::ostream& out) {
  const PipelineConfig cfg = load(c);
  const std::string ckpt_path = require_input(checkpoint_flag, "checkpoint");
  const std::string problems_path = require_input(pick({problems_flag, cfg.paths.corpus}), "problems file");
  EvalConfig ecfg = cfg.eval;
  if (runs) ecfg.runs = *runs;
  ecfg.seed = seed_of(c, ecfg.seed);
  try {
    validate(ecfg);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  const fs::path out_path = pick({c.out, under(cfg.paths.reports, "eval_report.jsonl"), "eval_report.jsonl"});
  const std::string benchmark = pick({benchmark_flag, fs::path(problems_path).stem().string()});

  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  if (ckpt.vocab.empty()) throw UsageError("checkpoint " + ckpt_path + " has no vocabulary");
  const Vocabulary vocab(ckpt.vocab);
  const auto problems = read_corpus(problems_path);
  Rewarder rewarder(cfg.judge);
  const EvalReport report = evaluate(ckpt.params, vocab, problems, rewarder, ecfg, benchmark);
  ensure_parent(out_path);
  write_reports(out_path, std::span<const EvalReport>(&report, 1));
  out << benchmark << ": pass@1 " << num(report.pass_at_1) << " over " << ecfg.runs << " runs x "
      << problems.size() << " problems -> " << out_path.string() << "\n";
  return kExitOk;
}

// ---- report ----

int cmd_report(const Common& c, const std::string& log_flag, std::ostream& out) {
  const std::string log_path = require_input(log_flag, "train log");
  fs::path prefix = c.out.empty() ? fs::path(log_path).replace_extension() : fs::path(c.out);
  if (prefix.extension() == ".log") prefix.replace_extension();
  const TrainLog log = read_train_log(log_path);
  const fs::path csv = fs::path(prefix.string() + ".csv");
  const fs::path svg = fs::path(prefix.string() + ".svg");
  ensure_parent(csv);
  for (const auto& [path, text] : {std::pair{csv, train_log_csv(log)}, std::pair{svg, train_log_svg(log)}}) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!(f << text)) throw std::runtime_error("cannot write " + path.string());
  }
  out << "wrote " << csv.string() << " and " << svg.string() << "\n";
  return kExitOk;
}

// ---- make-toy ----

int cmd_make_toy(const Common& c, int sft_steps, std::ostream& out) {
  const fs::path dir = c.out.empty() ? fs::path("toy") : fs::path(c.out);
  if (sft_steps < 1) throw UsageError("--sft-steps must be positive");
  fs::create_directories(dir);
  const ToyWorld world = make_toy_world();
  for (const auto& [name, problems] : toy_corpora(world)) write_records(dir / (name + ".jsonl"), problems);

  SftConfig sft;
  sft.steps = sft_steps;
  sft.seed = seed_of(c, 0);
  const PolicyParams base = train_base_policy(world, sft);
  save_checkpoint(dir / "base.ckpt", {base, world.vocab.words()});

  const ToyRlSettings rl = toy_rl_settings();
  PipelineConfig cfg;
  cfg.seed = 1;
  cfg.grpo = rl.grpo;
  cfg.eval = rl.eval;
  cfg.trainer.eval_problems = "level3_eval.jsonl";
  cfg.trainer.eval_every = rl.eval_every;
  cfg.trainer.total_steps = 120;
  StageSpec easy;
  easy.name = "easy";
  easy.mix = {{"level1", "level1.jsonl", 1.0}};
  easy.max_rollout_len = rl.easy_len;
  easy.steps_max = 60;
  easy.plateau = PlateauConfig{3, 0.01, 2};
  StageSpec hard;
  hard.name = "hard";
  hard.mix = {{"level3", "level3.jsonl", 1.0}};
  hard.max_rollout_len = rl.hard_len;
  hard.entropy_enabled = false;
  hard.exclude_truncated_from_loss = true;
  hard.steps_max = 120;
  cfg.stages = {easy, hard};
  save_config(dir / "staged.json", cfg);
  cfg.stages = {hard};
  save_config(dir / "hard_only.json", cfg);
  out << "wrote toy corpora, base.ckpt, staged.json and hard_only.json to " << dir.string() << "\n";
  return kExitOk;
}

}  // namespace

std::string train_log_csv(const TrainLog& log) {
  std::ostringstream s;
  s << "step,stage,stage_name,mean_reward,mean_length,truncation_fraction,loss,kl_term,entropy_term,"
       "reward_failures,eval_score\n";
  if (log.initial_eval) s << "0,,,,,,,,,," << num(*log.initial_eval) << "\n";
  for (const auto& r : log.steps) {
    s << r.step << ',' << r.stage << ',' << r.stage_name << ',' << num(r.mean_reward) << ',' << num(r.mean_length)
      << ',' << num(r.truncation_fraction) << ',' << num(r.loss) << ',' << num(r.kl_term) << ','
      << num(r.entropy_term) << ',' << r.reward_failures << ',' << (r.eval_score ? num(*r.eval_score) : "") << "\n";
  }
  return s.str();
}

std::string train_log_svg(const TrainLog& log) {
  constexpr double W = 720, H = 400, left = 60, right = 20, top = 30, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  int max_step = 1;
  double lo = 0, hi = 1;
  for (const auto& r : log.steps) {
    max_step = std::max(max_step, r.step);
    lo = std::min(lo, r.mean_reward);
    hi = std::max(hi, r.mean_reward);
  }
  auto x = [&](double step) { return left + pw * step / max_step; };
  auto y = [&](double v) { return top + ph * (1 - (v - lo) / (hi - lo)); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = lo + (hi - lo) * i / 4;
    s << "<text x=\"" << left - 8 << "\" y=\"" << fixed2(y(v) + 4) << "\" text-anchor=\"end\">" << fixed2(v)
      << "</text>\n";
    const int step = max_step * i / 4;
    s << "<text x=\"" << fixed2(x(step)) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << step
      << "</text>\n";
  }
  s << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">step</text>\n";
  s << "<text x=\"15\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 15 " << top + ph / 2
    << ")\" text-anchor=\"middle\">reward</text>\n";

  for (const auto& t : log.transitions) {
    s << "<line x1=\"" << fixed2(x(t.step)) << "\" y1=\"" << top << "\" x2=\"" << fixed2(x(t.step)) << "\" y2=\""
      << top + ph << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
    s << "<text x=\"" << fixed2(x(t.step) + 4) << "\" y=\"" << top + 12 << "\" fill=\"gray\">stage " << t.to_stage
      << "</text>\n";
  }

  s << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
  for (const auto& r : log.steps) s << fixed2(x(r.step)) << ',' << fixed2(y(r.mean_reward)) << ' ';
  s << "\"/>\n";

  std::vector<std::pair<int, double>> evals;
  if (log.initial_eval) evals.emplace_back(0, *log.initial_eval);
  for (const auto& r : log.steps) {
    if (r.eval_score) evals.emplace_back(r.step, *r.eval_score);
  }
  if (!evals.empty()) {
    s << "<polyline fill=\"none\" stroke=\"#ff7f0e\" stroke-width=\"1.5\" points=\"";
    for (const auto& [step, v] : evals) s << fixed2(x(step)) << ',' << fixed2(y(v)) << ' ';
    s << "\"/>\n";
  }
  s << "<text x=\"" << left + 10 << "\" y=\"" << top - 10 << "\" fill=\"#1f77b4\">train reward</text>\n";
  s << "<text x=\"" << left + 110 << "\" y=\"" << top - 10 << "\" fill=\"#ff7f0e\">eval pass@1</text>\n";
  s << "</svg>\n";
  return s.str();
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"stagerl: staged GRPO training pipeline"};
  app.require_subcommand(1);

  Common score_c, bucket_c, train_c, eval_c, report_c, toy_c;
  std::string problems, rollouts, scores, checkpoint, log, benchmark, domain = "math";
  bool level2_overlap = false;
  int runs = 0, sft_steps = 8000;

  auto* score = app.add_subcommand("score", "score rollouts with the math verifier or code judge");
  add_common(score, score_c);
  score->add_option("--problems", problems, "problems file");
  score->add_option("--rollouts", rollouts, "rollouts file");

  auto* bucket = app.add_subcommand("bucket", "assign difficulty levels from scored attempts");
  add_common(bucket, bucket_c);
  bucket->add_option("--scores", scores, "scores file");
  bucket->add_option("--problems", problems, "problems file (for problem domains)");
  bucket->add_option("--default-domain", domain, "domain of problems missing from --problems");
  bucket->add_flag("--level2-on-overlap", level2_overlap, "send problems both small tiers partially solve to level 2");

  auto* train = app.add_subcommand("train", "run staged GRPO training");
  add_common(train, train_c);
  train->add_option("--checkpoint", checkpoint, "starting checkpoint");
  train->add_option("--log", log, "train log path (default: <out>.log.jsonl)");

  auto* eval = app.add_subcommand("eval", "pass@1 evaluation of a checkpoint");
  add_common(eval, eval_c);
  eval->add_option("--checkpoint", checkpoint, "checkpoint");
  eval->add_option("--problems", problems, "problems file");
  auto* runs_opt = eval->add_option("--runs", runs, "independent runs");
  eval->add_option("--benchmark", benchmark, "benchmark name (default: problems file stem)");

  auto* report = app.add_subcommand("report", "export a train log as CSV and an SVG chart");
  add_common(report, report_c);
  report->add_option("--log", log, "train log");

  auto* toy = app.add_subcommand("make-toy", "write the toy corpora, a base policy and example configs");
  add_common(toy, toy_c);
  toy->add_option("--sft-steps", sft_steps, "base policy fitting steps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (score->parsed()) return cmd_score(score_c, problems, rollouts, out, err);
    if (bucket->parsed()) return cmd_bucket(bucket_c, scores, problems, domain, level2_overlap, out);
    if (train->parsed()) return cmd_train(train_c, checkpoint, log, out);
    if (eval->parsed()) {
      return cmd_eval(eval_c, checkpoint, problems, runs_opt->count() ? std::optional<int>(runs) : std::nullopt,
                      benchmark, out);
    }
    if (report->parsed()) return cmd_report(report_c, log, out);
    if (toy->parsed()) return cmd_make_toy(toy_c, sft_steps, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace stagerl
