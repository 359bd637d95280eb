#include "stagerl/eval_harness.hpp"

#include <fstream>
#include <map>
#include <stdexcept>

#include "stagerl/rng.hpp"

namespace stagerl {

void validate(const EvalConfig& cfg) {
  if (cfg.runs < 1) throw std::invalid_argument("eval: runs must be >= 1");
  SamplerConfig s{cfg.temperature, cfg.top_p, cfg.max_len, 0, 0};
  validate(s);
}

bool counts_as_pass(double score) { return score == 1.0; }

void aggregate(EvalReport& report, const std::vector<std::vector<bool>>& passed,
               std::span<const std::string> problem_ids) {
  if (passed.empty() || problem_ids.empty()) throw std::invalid_argument("aggregate: empty score matrix");
  const std::size_t P = problem_ids.size();
  report.per_run_accuracy.clear();
  report.per_problem.clear();
  for (const auto& id : problem_ids) report.per_problem.push_back({id, 0});
  for (const auto& row : passed) {
    if (row.size() != P) throw std::invalid_argument("aggregate: ragged score matrix");
    int hits = 0;
    for (std::size_t p = 0; p < P; ++p) {
      hits += row[p];
      report.per_problem[p].passes += row[p];
    }
    report.per_run_accuracy.push_back(static_cast<double>(hits) / static_cast<double>(P));
  }
  double sum = 0;
  for (double a : report.per_run_accuracy) sum += a;
  report.pass_at_1 = sum / static_cast<double>(report.per_run_accuracy.size());
}

EvalReport evaluate(const PolicyParams& params, const Vocabulary& vocab, std::span<const Problem> problems,
                    Rewarder& rewarder, const EvalConfig& cfg, std::string benchmark) {
  validate(cfg);
  if (problems.empty()) throw std::invalid_argument("evaluate: no problems");
  std::vector<std::vector<TokenId>> prompts;
  std::vector<std::string> ids;
  for (const Problem& p : problems) {
    prompts.push_back(vocab.encode(p.prompt));
    ids.push_back(p.id);
  }
  std::vector<std::vector<bool>> passed(cfg.runs, std::vector<bool>(problems.size()));
  for (int r = 0; r < cfg.runs; ++r) {
    for (std::size_t p = 0; p < problems.size(); ++p) {
      SamplerConfig s{cfg.temperature, cfg.top_p, cfg.max_len,
                      stream_seed(cfg.seed, {static_cast<std::uint64_t>(r), p}), vocab.end_token()};
      Rollout out = sample(params, s, prompts[p]);
      passed[r][p] = counts_as_pass(rewarder.score(problems[p], vocab.decode(*out.token_ids)));
    }
  }
  EvalReport report;
  report.benchmark = std::move(benchmark);
  report.config = cfg;
  aggregate(report, passed, ids);
  return report;
}

std::vector<ReportDelta> compare_reports(std::span<const EvalReport> a, std::span<const EvalReport> b) {
  std::map<std::string, const EvalReport*> left, right;
  for (const auto& r : a) left[r.benchmark] = &r;
  for (const auto& r : b) right[r.benchmark] = &r;
  if (left.size() != right.size()) throw std::invalid_argument("compare_reports: benchmark sets differ");
  std::vector<ReportDelta> out;
  for (const auto& [name, ra] : left) {
    auto it = right.find(name);
    if (it == right.end()) throw std::invalid_argument("compare_reports: benchmark '" + name + "' missing");
    ReportDelta d;
    d.benchmark = name;
    d.delta = it->second->pass_at_1 - ra->pass_at_1;
    d.improved = d.delta > 0;
    d.regressed = d.delta < 0;
    out.push_back(d);
  }
  return out;
}

void to_json(nlohmann::json& j, const EvalConfig& c) {
  j = {{"runs", c.runs}, {"temperature", c.temperature}, {"top_p", c.top_p}, {"max_len", c.max_len},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, EvalConfig& c) {
  EvalConfig d;
  c.runs = j.value("runs", d.runs);
  c.temperature = j.value("temperature", d.temperature);
  c.top_p = j.value("top_p", d.top_p);
  c.max_len = j.value("max_len", d.max_len);
  c.seed = j.value("seed", d.seed);
}

void to_json(nlohmann::json& j, const EvalReport& r) {
  nlohmann::json counts = nlohmann::json::array();
  for (const auto& c : r.per_problem) counts.push_back({{"problem_id", c.problem_id}, {"passes", c.passes}});
  j = {{"benchmark", r.benchmark},
       {"pass_at_1", r.pass_at_1},
       {"per_run_accuracy", r.per_run_accuracy},
       {"per_problem", counts},
       {"config", r.config}};
}

void from_json(const nlohmann::json& j, EvalReport& r) {
  r.benchmark = j.at("benchmark").get<std::string>();
  r.pass_at_1 = j.at("pass_at_1").get<double>();
  r.per_run_accuracy = j.at("per_run_accuracy").get<std::vector<double>>();
  r.per_problem.clear();
  for (const auto& c : j.at("per_problem")) {
    r.per_problem.push_back({c.at("problem_id").get<std::string>(), c.at("passes").get<int>()});
  }
  r.config = j.at("config").get<EvalConfig>();
}

void write_reports(const std::filesystem::path& path, std::span<const EvalReport> reports) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& r : reports) out << nlohmann::json(r).dump() << '\n';
  if (!out) throw std::runtime_error("error writing " + path.string());
}

std::vector<EvalReport> read_reports(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<EvalReport> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<EvalReport>());
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace stagerl
