#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "oracles.hpp"
#include "stagerl/cli.hpp"
#include "stagerl/difficulty.hpp"
#include "stagerl/pipeline_config.hpp"
#include "stagerl/toy_world.hpp"
#include "temp_dir.hpp"

using namespace stagerl;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "stagerl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

Problem math_problem(const std::string& id, const std::string& answer) {
  Problem p;
  p.id = id;
  p.prompt = "q";
  p.answer = answer;
  return p;
}

Rollout text_rollout(const std::string& id, int attempt, const std::string& text) {
  Rollout r;
  r.problem_id = id;
  r.model_id = "tier_7b";
  r.attempt = attempt;
  r.text = text;
  return r;
}

// Toy problems plus a small random policy checkpoint over the toy vocabulary.
struct ToyFiles {
  TempDir dir;
  ToyFiles() {
    const auto world = make_toy_world();
    const auto corpora = toy_corpora(world);
    write_records(dir / "level1.jsonl", corpora.at("level1"));
    write_records(dir / "level1_eval.jsonl", corpora.at("level1_eval"));
    const auto params = PolicyParams::random(PolicyShape{int(world.vocab.size()), 8, 16}, 2, 0.5);
    save_checkpoint(dir / "base.ckpt", {params, world.vocab.words()});
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("score writes one record per rollout") {
  TempDir dir;
  write_records(dir / "problems.jsonl", std::vector<Problem>{math_problem("a", "1/2"), math_problem("b", "x+1")});
  std::vector<Rollout> rollouts;
  const char* texts[] = {"\\boxed{0.5}", "\\boxed{2/4}", "\\boxed{1/3}", "no answer", "\\boxed{\\frac{1}{2}}"};
  for (int i = 0; i < 5; ++i) rollouts.push_back(text_rollout("a", i, texts[i]));
  const char* texts_b[] = {"\\boxed{1+x}", "\\boxed{x}", "\\boxed{x + 1}", "\\boxed{x+2}", "\\boxed{(x+1)}"};
  for (int i = 0; i < 5; ++i) rollouts.push_back(text_rollout("b", i, texts_b[i]));
  write_records(dir / "rollouts.jsonl", rollouts);

  const auto r = run({"score", "--problems", (dir / "problems.jsonl").string(), "--rollouts",
                      (dir / "rollouts.jsonl").string(), "--out", (dir / "scores.jsonl").string()});
  CHECK(r.code == kExitOk);
  const auto scores = read_scores(dir / "scores.jsonl");
  REQUIRE(scores.size() == 10);
  int passed = 0;
  for (const auto& s : scores) passed += s.passed;
  CHECK(passed == 6);
  CHECK(scores[0].score == 1.0);
  CHECK(scores[2].score == 0.0);
  CHECK(r.out.find("6 passed") != std::string::npos);
}

TEST_CASE("score skips unknown problems with a warning and accepts an empty file") {
  TempDir dir;
  write_records(dir / "problems.jsonl", std::vector<Problem>{math_problem("a", "2")});
  write_records(dir / "rollouts.jsonl", std::vector<Rollout>{text_rollout("zzz", 0, "\\boxed{2}")});
  auto r = run({"score", "--problems", (dir / "problems.jsonl").string(), "--rollouts",
                (dir / "rollouts.jsonl").string(), "--out", (dir / "s.jsonl").string()});
  CHECK(r.code == kExitOk);
  CHECK(r.err.find("zzz") != std::string::npos);
  CHECK(read_scores(dir / "s.jsonl").empty());

  dir.write("empty.jsonl", "");
  r = run({"score", "--problems", (dir / "problems.jsonl").string(), "--rollouts", (dir / "empty.jsonl").string(),
           "--out", (dir / "s2.jsonl").string()});
  CHECK(r.code == kExitOk);
  CHECK(read_scores(dir / "s2.jsonl").empty());
}

TEST_CASE("missing inputs and bad arguments are usage errors") {
  TempDir dir;
  CHECK(run({"score", "--problems", (dir / "nope.jsonl").string(), "--rollouts", "x"}).code == kExitUsage);
  CHECK(run({"score"}).code == kExitUsage);
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"eval", "--runs", "many"}).code == kExitUsage);
  CHECK(run({"--help"}).code == kExitOk);
  dir.write("bad.json", R"({"grpo": {"group_size": 1}})");
  dir.write("p.jsonl", "");
  const auto r = run({"eval", "--config", (dir / "bad.json").string(), "--checkpoint", (dir / "p.jsonl").string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("group_size") != std::string::npos);
  dir.write("broken.jsonl", "{\"id\": \"a\"\n");
  write_records(dir / "r.jsonl", std::vector<Rollout>{});
  CHECK(run({"score", "--problems", (dir / "broken.jsonl").string(), "--rollouts", (dir / "r.jsonl").string(),
             "--out", (dir / "s.jsonl").string()})
            .code == kExitFailure);
}

TEST_CASE("bucket reproduces the level truth table") {
  // 256 problems, one per combination of four tier pass rates.
  TempDir dir;
  const int passes[] = {0, 1, 2, 4};
  const char* models[] = {"tier_1_5b", "tier_7b", "tier_32b", "tier_r1"};
  std::vector<ScoreRecord> scores;
  std::map<std::string, oracle::Expected> want;
  int n = 0;
  for (int a : passes) {
    for (int b : passes) {
      for (int c : passes) {
        for (int d : passes) {
          char id[16];
          std::snprintf(id, sizeof id, "p%03d", n++);
          const int k[] = {a, b, c, d};
          for (int m = 0; m < 4; ++m) {
            for (int t = 0; t < 4; ++t) scores.push_back({id, models[m], t, t < k[m] ? 1.0 : 0.0, t < k[m]});
          }
          want[id] = oracle::expected_level(a / 4.0, b / 4.0, c / 4.0, d / 4.0);
        }
      }
    }
  }
  write_records(dir / "scores.jsonl", scores);
  const auto r = run({"bucket", "--scores", (dir / "scores.jsonl").string(), "--out", (dir / "b.jsonl").string(),
                      "--seed", "7"});
  REQUIRE(r.code == kExitOk);
  const auto buckets = read_buckets(dir / "b.jsonl");
  REQUIRE(buckets.size() == 256);
  std::size_t solved = 0, kept = 0;
  for (const auto& b : buckets) {
    const auto& w = want.at(b.problem_id);
    INFO(b.problem_id);
    if (std::string(w.reason) == reason::large_solves) {
      ++solved;
      kept += b.level == Level::level3;
      if (b.level != Level::level3) CHECK(b.reason == reason::retention_dropped);
    } else {
      CHECK(to_string(b.level) == std::string(w.level));
      CHECK(b.reason == w.reason);
    }
  }
  CHECK(kept == retention_count(solved, 50));
}

TEST_CASE("train with zero steps leaves the checkpoint unchanged") {
  ToyFiles f;
  PipelineConfig cfg;
  cfg.grpo.group_size = 2;
  cfg.grpo.batch_size = 2;
  StageSpec s;
  s.name = "only";
  s.mix = {{"level1", "level1.jsonl", 1.0}};
  s.steps_max = 0;
  cfg.stages = {s};
  save_config(f.dir / "c.json", cfg);
  const auto r = run({"train", "--config", f.path("c.json"), "--checkpoint", f.path("base.ckpt"), "--out",
                      f.path("out.ckpt")});
  REQUIRE(r.code == kExitOk);
  CHECK(slurp(f.dir / "out.ckpt") == slurp(f.dir / "base.ckpt"));
  CHECK(read_train_log(f.dir / "out.log.jsonl").steps.empty());

  CHECK(run({"train", "--checkpoint", f.path("base.ckpt")}).code == kExitUsage);
}

TEST_CASE("train, eval and report on the toy problems") {
  ToyFiles f;
  PipelineConfig cfg;
  cfg.seed = 5;
  cfg.grpo.group_size = 2;
  cfg.grpo.batch_size = 2;
  cfg.grpo.learning_rate = 0.1;
  cfg.eval = EvalConfig{2, 0.6, 0.95, 8, 1};
  cfg.trainer.eval_problems = "level1_eval.jsonl";
  cfg.trainer.eval_every = 2;
  StageSpec s;
  s.name = "easy";
  s.mix = {{"level1", "level1.jsonl", 1.0}};
  s.max_rollout_len = 8;
  s.steps_max = 2;
  StageSpec t = s;
  t.name = "hard";
  t.max_rollout_len = 10;
  cfg.stages = {s, t};
  save_config(f.dir / "c.json", cfg);

  auto r = run({"train", "--config", f.path("c.json"), "--checkpoint", f.path("base.ckpt"), "--out",
                f.path("trained.ckpt")});
  REQUIRE(r.code == kExitOk);
  const auto log = read_train_log(f.dir / "trained.log.jsonl");
  CHECK(log.steps.size() == 4);
  CHECK(log.transitions.size() == 1);
  CHECK(r.out.find("step 2 [easy]") != std::string::npos);

  // Evaluation is byte-reproducible.
  for (const char* name : {"e1.jsonl", "e2.jsonl"}) {
    r = run({"eval", "--checkpoint", f.path("trained.ckpt"), "--problems", f.path("level1_eval.jsonl"), "--runs",
             "4", "--out", f.path(name)});
    REQUIRE(r.code == kExitOk);
  }
  CHECK(slurp(f.dir / "e1.jsonl") == slurp(f.dir / "e2.jsonl"));
  const auto reports = read_reports(f.dir / "e1.jsonl");
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].benchmark == "level1_eval");
  CHECK(reports[0].per_run_accuracy.size() == 4);

  r = run({"report", "--log", f.path("trained.log.jsonl")});
  REQUIRE(r.code == kExitOk);
  const std::string csv = slurp(f.dir / "trained.csv");
  CHECK(csv.rfind("step,stage,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);  // header, initial eval, 4 steps
  CHECK(slurp(f.dir / "trained.svg").find("<svg") == 0);
}

TEST_CASE("the installed binary reports exit codes") {
  const std::string bin = STAGERL_CLI_BINARY;
  auto status = [&](const std::string& args) {
    const int s = std::system((bin + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  CHECK(status("--help") == 0);
  CHECK(status("") == 2);
  CHECK(status("score --problems /nonexistent/p.jsonl --rollouts /nonexistent/r.jsonl") == 2);
}
