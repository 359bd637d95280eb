#include "stagerl/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace stagerl {

namespace {

using nlohmann::json;

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <typename Record>
std::vector<Record> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open " + path.string());
  std::vector<Record> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      Record r = json::parse(line).get<Record>();
      validate(r);
      out.push_back(std::move(r));
    } catch (const CorpusError& e) {
      throw CorpusError(path.string() + ":" + std::to_string(lineno) + ": " + e.what(), lineno);
    } catch (const json::exception& e) {
      throw CorpusError(path.string() + ":" + std::to_string(lineno) + ": " + e.what(), lineno);
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(Domain d) { return d == Domain::math ? "math" : "code"; }

Domain parse_domain(std::string_view s) {
  if (s == "math") return Domain::math;
  if (s == "code") return Domain::code;
  throw CorpusError("unknown domain '" + std::string(s) + "'");
}

std::string_view to_string(Level l) {
  switch (l) {
    case Level::level1: return "level1";
    case Level::level2: return "level2";
    case Level::level3: return "level3";
    case Level::discarded: return "discarded";
    case Level::unassigned: return "unassigned";
  }
  return "unassigned";
}

Level parse_level(std::string_view s) {
  for (Level l : {Level::level1, Level::level2, Level::level3, Level::discarded, Level::unassigned}) {
    if (to_string(l) == s) return l;
  }
  throw CorpusError("unknown level '" + std::string(s) + "'");
}

void validate(const TestCase& t) {
  if (t.time_limit_ms <= 0) throw CorpusError("time_limit_ms must be positive");
  if (t.memory_limit_mb <= 0) throw CorpusError("memory_limit_mb must be positive");
}

void validate(const Problem& p) {
  if (p.id.empty()) throw CorpusError("problem id is empty");
  if (p.domain == Domain::math) {
    if (!p.answer) throw CorpusError("math problem '" + p.id + "' has no answer");
    if (p.tests) throw CorpusError("math problem '" + p.id + "' must not carry tests");
  } else {
    if (!p.tests || p.tests->empty())
      throw CorpusError("code problem '" + p.id + "' has no tests");
    if (p.answer) throw CorpusError("code problem '" + p.id + "' must not carry an answer");
    for (const auto& t : *p.tests) validate(t);
  }
}

void validate(const Rollout& r) {
  if (r.problem_id.empty()) throw CorpusError("rollout has empty problem_id");
  if (r.attempt < 0) throw CorpusError("rollout attempt is negative");
  if (r.logprobs) {
    if (!r.token_ids) throw CorpusError("rollout has logprobs but no token_ids");
    if (r.logprobs->size() != r.token_ids->size())
      throw CorpusError("rollout logprobs and token_ids differ in length");
  }
}

void validate(const ScoreRecord& s) {
  if (s.problem_id.empty()) throw CorpusError("score has empty problem_id");
  if (s.attempt < 0) throw CorpusError("score attempt is negative");
  if (!(s.score >= 0.0 && s.score <= 1.0)) throw CorpusError("score outside [0, 1]");
  if (s.passed != (s.score == 1.0)) throw CorpusError("passed must hold exactly when score = 1");
}

void validate(const BucketAssignment& b) {
  if (b.problem_id.empty()) throw CorpusError("bucket has empty problem_id");
}

void to_json(json& j, const TestCase& t) {
  j = json{{"stdin", t.input},
           {"expected_stdout", t.expected_stdout},
           {"time_limit_ms", t.time_limit_ms},
           {"memory_limit_mb", t.memory_limit_mb}};
}

void from_json(const json& j, TestCase& t) {
  t.input = j.at("stdin").get<std::string>();
  t.expected_stdout = j.at("expected_stdout").get<std::string>();
  t.time_limit_ms = j.value("time_limit_ms", 1000);
  t.memory_limit_mb = j.value("memory_limit_mb", 256);
}

void to_json(json& j, const Problem& p) {
  j = json{{"id", p.id}, {"domain", std::string(to_string(p.domain))}, {"prompt", p.prompt}};
  put_optional(j, "answer", p.answer);
  put_optional(j, "tests", p.tests);
  if (!p.meta.empty()) j["meta"] = p.meta;
}

void from_json(const json& j, Problem& p) {
  if (!j.is_object()) throw CorpusError("record is not an object");
  p.id = j.at("id").get<std::string>();
  p.domain = parse_domain(j.at("domain").get<std::string>());
  p.prompt = j.at("prompt").get<std::string>();
  p.answer = optional_field<std::string>(j, "answer");
  p.tests = optional_field<std::vector<TestCase>>(j, "tests");
  p.meta.clear();
  if (auto it = j.find("meta"); it != j.end() && !it->is_null()) {
    for (const auto& [k, v] : it->items()) p.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
  }
  static const char* known[] = {"id", "domain", "prompt", "answer", "tests", "meta"};
  for (const auto& [k, v] : j.items()) {
    if (std::find(std::begin(known), std::end(known), k) != std::end(known)) continue;
    p.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
  }
}

void to_json(json& j, const Rollout& r) {
  j = json{{"problem_id", r.problem_id},
           {"model_id", r.model_id},
           {"attempt", r.attempt},
           {"text", r.text}};
  put_optional(j, "token_ids", r.token_ids);
  put_optional(j, "logprobs", r.logprobs);
  j["truncated"] = r.truncated;
}

void from_json(const json& j, Rollout& r) {
  r.problem_id = j.at("problem_id").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  r.attempt = j.value("attempt", 0);
  r.text = j.at("text").get<std::string>();
  r.token_ids = optional_field<std::vector<TokenId>>(j, "token_ids");
  r.logprobs = optional_field<std::vector<double>>(j, "logprobs");
  r.truncated = j.value("truncated", false);
}

void to_json(json& j, const ScoreRecord& s) {
  j = json{{"problem_id", s.problem_id},
           {"model_id", s.model_id},
           {"attempt", s.attempt},
           {"score", s.score},
           {"passed", s.passed}};
}

void from_json(const json& j, ScoreRecord& s) {
  s.problem_id = j.at("problem_id").get<std::string>();
  s.model_id = j.at("model_id").get<std::string>();
  s.attempt = j.value("attempt", 0);
  s.score = j.at("score").get<double>();
  s.passed = j.contains("passed") ? j.at("passed").get<bool>() : s.score == 1.0;
}

void to_json(json& j, const BucketAssignment& b) {
  j = json{{"problem_id", b.problem_id}, {"level", std::string(to_string(b.level))}, {"reason", b.reason}};
}

void from_json(const json& j, BucketAssignment& b) {
  b.problem_id = j.at("problem_id").get<std::string>();
  b.level = parse_level(j.at("level").get<std::string>());
  b.reason = j.value("reason", "");
}

std::vector<Problem> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open " + path.string());
  std::vector<Problem> out;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw CorpusError(path.string() + ":" + std::to_string(lineno) + ": " + msg, lineno);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Problem p;
    try {
      p = json::parse(line).get<Problem>();
      validate(p);
    } catch (const CorpusError& e) {
      fail(e.what());
    } catch (const json::exception& e) {
      fail(e.what());
    }
    auto [it, inserted] = seen.emplace(p.id, lineno);
    if (!inserted) {
      fail("duplicate problem id '" + p.id + "' (first seen on line " + std::to_string(it->second) + ")");
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Rollout> read_rollouts(const std::filesystem::path& path) {
  return read_lines<Rollout>(path);
}

std::vector<ScoreRecord> read_scores(const std::filesystem::path& path) {
  return read_lines<ScoreRecord>(path);
}

std::vector<BucketAssignment> read_buckets(const std::filesystem::path& path) {
  return read_lines<BucketAssignment>(path);
}

template <typename Record>
void write_records(const std::filesystem::path& path, std::span<const Record> records) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      validate(records[i]);
    } catch (const CorpusError& e) {
      throw CorpusError("record " + std::to_string(i) + " rejected: " + e.what());
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& r : records) out << to_line(r) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

template void write_records<Problem>(const std::filesystem::path&, std::span<const Problem>);
template void write_records<Rollout>(const std::filesystem::path&, std::span<const Rollout>);
template void write_records<ScoreRecord>(const std::filesystem::path&, std::span<const ScoreRecord>);
template void write_records<BucketAssignment>(const std::filesystem::path&,
                                              std::span<const BucketAssignment>);

std::size_t token_count(const Rollout& r) {
  if (r.token_ids) return r.token_ids->size();
  std::istringstream ss(r.text);
  std::size_t n = 0;
  std::string w;
  while (ss >> w) ++n;
  return n;
}

}  // namespace stagerl
