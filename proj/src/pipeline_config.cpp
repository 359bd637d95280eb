#include "stagerl/pipeline_config.hpp"

#include <fstream>
#include <initializer_list>
#include <string_view>

#include "stagerl/corpus.hpp"

namespace stagerl {

namespace fs = std::filesystem;

namespace {

void check_keys(const nlohmann::json& j, std::string_view section, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(section) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ConfigError(std::string(section) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <typename T>
void read_optional(const nlohmann::json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
  } else {
    out = j.at(key).get<T>();
  }
}

template <typename T>
nlohmann::json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

void resolve(std::string& p, const fs::path& base) {
  if (!p.empty() && fs::path(p).is_relative()) p = (base / p).lexically_normal().string();
}

}  // namespace

void to_json(nlohmann::json& j, const GrpoConfig& c) {
  j = {{"group_size", c.group_size},
       {"learning_rate", c.learning_rate},
       {"kl_coef", c.kl_coef},
       {"entropy_coef", c.entropy_coef},
       {"batch_size", c.batch_size},
       {"advantage_epsilon", c.advantage_epsilon},
       {"exclude_truncated_from_loss", c.exclude_truncated_from_loss},
       {"per_token_average", c.per_token_average}};
}

void from_json(const nlohmann::json& j, GrpoConfig& c) {
  check_keys(j, "grpo",
             {"group_size", "learning_rate", "kl_coef", "entropy_coef", "batch_size", "advantage_epsilon",
              "exclude_truncated_from_loss", "per_token_average"});
  read_field(j, "group_size", c.group_size);
  read_field(j, "learning_rate", c.learning_rate);
  read_field(j, "kl_coef", c.kl_coef);
  read_field(j, "entropy_coef", c.entropy_coef);
  read_field(j, "batch_size", c.batch_size);
  read_field(j, "advantage_epsilon", c.advantage_epsilon);
  read_field(j, "exclude_truncated_from_loss", c.exclude_truncated_from_loss);
  read_field(j, "per_token_average", c.per_token_average);
}

void to_json(nlohmann::json& j, const JudgeConfig& c) {
  j = {{"runner_command", c.runner_command},
       {"source_filename", c.source_filename},
       {"max_parallel", c.max_parallel},
       {"output_cap_bytes", c.output_cap_bytes},
       {"scratch_root", c.scratch_root.string()},
       {"keep_scratch", c.keep_scratch},
       {"confine_writes", c.confine_writes}};
}

void from_json(const nlohmann::json& j, JudgeConfig& c) {
  check_keys(j, "judge",
             {"runner_command", "source_filename", "max_parallel", "output_cap_bytes", "scratch_root",
              "keep_scratch", "confine_writes"});
  read_field(j, "runner_command", c.runner_command);
  read_field(j, "source_filename", c.source_filename);
  read_field(j, "max_parallel", c.max_parallel);
  read_field(j, "output_cap_bytes", c.output_cap_bytes);
  if (j.contains("scratch_root")) c.scratch_root = j.at("scratch_root").get<std::string>();
  read_field(j, "keep_scratch", c.keep_scratch);
  read_field(j, "confine_writes", c.confine_writes);
}

void to_json(nlohmann::json& j, const PlateauConfig& c) {
  j = {{"window", c.window}, {"min_delta", c.min_delta}, {"patience", c.patience}};
}

void from_json(const nlohmann::json& j, PlateauConfig& c) {
  check_keys(j, "plateau", {"window", "min_delta", "patience"});
  read_field(j, "window", c.window);
  read_field(j, "min_delta", c.min_delta);
  read_field(j, "patience", c.patience);
}

void to_json(nlohmann::json& j, const StageSpec& s) {
  nlohmann::json mix = nlohmann::json::array();
  for (const auto& m : s.mix) mix.push_back({{"name", m.name}, {"path", m.path}, {"weight", m.weight}});
  j = {{"name", s.name},
       {"mix", mix},
       {"max_rollout_len", s.max_rollout_len},
       {"entropy_enabled", s.entropy_enabled},
       {"exclude_truncated_from_loss", s.exclude_truncated_from_loss},
       {"steps_max", s.steps_max},
       {"plateau", optional_json(s.plateau)}};
}

void from_json(const nlohmann::json& j, StageSpec& s) {
  check_keys(j, "stage",
             {"name", "mix", "max_rollout_len", "entropy_enabled", "exclude_truncated_from_loss", "steps_max",
              "plateau"});
  read_field(j, "name", s.name);
  if (j.contains("mix")) {
    s.mix.clear();
    for (const auto& m : j.at("mix")) {
      check_keys(m, "mix component", {"name", "path", "weight"});
      MixSpec spec;
      spec.path = m.at("path").get<std::string>();
      spec.name = m.value("name", spec.path);
      read_field(m, "weight", spec.weight);
      s.mix.push_back(std::move(spec));
    }
  }
  read_field(j, "max_rollout_len", s.max_rollout_len);
  read_field(j, "entropy_enabled", s.entropy_enabled);
  read_field(j, "exclude_truncated_from_loss", s.exclude_truncated_from_loss);
  read_field(j, "steps_max", s.steps_max);
  read_optional(j, "plateau", s.plateau);
}

void to_json(nlohmann::json& j, const PipelineConfig& c) {
  j = {{"seed", c.seed},
       {"paths",
        {{"corpus", c.paths.corpus},
         {"rollouts", c.paths.rollouts},
         {"scores", c.paths.scores},
         {"buckets", c.paths.buckets},
         {"checkpoints", c.paths.checkpoints},
         {"reports", c.paths.reports}}},
       {"grpo", c.grpo},
       {"stages", c.stages},
       {"eval", c.eval},
       {"judge", c.judge},
       {"trainer",
        {{"eval_problems", c.trainer.eval_problems},
         {"eval_every", c.trainer.eval_every},
         {"total_steps", optional_json(c.trainer.total_steps)},
         {"temperature", c.trainer.temperature},
         {"top_p", c.trainer.top_p}}}};
}

void from_json(const nlohmann::json& j, PipelineConfig& c) {
  check_keys(j, "config", {"seed", "paths", "grpo", "stages", "eval", "judge", "trainer"});
  read_field(j, "seed", c.seed);
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    check_keys(p, "paths", {"corpus", "rollouts", "scores", "buckets", "checkpoints", "reports"});
    read_field(p, "corpus", c.paths.corpus);
    read_field(p, "rollouts", c.paths.rollouts);
    read_field(p, "scores", c.paths.scores);
    read_field(p, "buckets", c.paths.buckets);
    read_field(p, "checkpoints", c.paths.checkpoints);
    read_field(p, "reports", c.paths.reports);
  }
  if (j.contains("grpo")) j.at("grpo").get_to(c.grpo);
  if (j.contains("stages")) c.stages = j.at("stages").get<std::vector<StageSpec>>();
  if (j.contains("eval")) {
    check_keys(j.at("eval"), "eval", {"runs", "temperature", "top_p", "max_len", "seed"});
    j.at("eval").get_to(c.eval);
  }
  if (j.contains("judge")) j.at("judge").get_to(c.judge);
  if (j.contains("trainer")) {
    const auto& t = j.at("trainer");
    check_keys(t, "trainer", {"eval_problems", "eval_every", "total_steps", "temperature", "top_p"});
    read_field(t, "eval_problems", c.trainer.eval_problems);
    read_field(t, "eval_every", c.trainer.eval_every);
    read_optional(t, "total_steps", c.trainer.total_steps);
    read_field(t, "temperature", c.trainer.temperature);
    read_field(t, "top_p", c.trainer.top_p);
  }
}

void validate(const PipelineConfig& cfg) {
  try {
    validate(cfg.grpo);
    validate(cfg.eval);
    validate(cfg.judge);
    for (const auto& s : cfg.stages) {
      if (s.mix.empty()) throw std::invalid_argument("stage '" + s.name + "': empty mix");
      for (const auto& m : s.mix) {
        if (m.path.empty()) throw std::invalid_argument("stage '" + s.name + "': mix component without a path");
        if (!(m.weight > 0)) throw std::invalid_argument("stage '" + s.name + "': weights must be positive");
      }
      if (s.max_rollout_len < 1) throw std::invalid_argument("stage '" + s.name + "': max_rollout_len < 1");
      if (s.steps_max < 0) throw std::invalid_argument("stage '" + s.name + "': steps_max < 0");
      if (s.plateau) validate(*s.plateau);
    }
    if (cfg.trainer.eval_every < 0) throw std::invalid_argument("trainer: eval_every < 0");
    if (cfg.trainer.total_steps && *cfg.trainer.total_steps < 0) {
      throw std::invalid_argument("trainer: total_steps < 0");
    }
    SamplerConfig s;
    s.temperature = cfg.trainer.temperature;
    s.top_p = cfg.trainer.top_p;
    validate(s);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  PipelineConfig cfg;
  try {
    from_json(nlohmann::json::parse(in), cfg);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  validate(cfg);
  return cfg;
}

void save_config(const fs::path& path, const PipelineConfig& cfg) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << nlohmann::json(cfg).dump(2) << '\n';
  if (!out) throw std::runtime_error("error writing " + path.string());
}

void resolve_paths(PipelineConfig& cfg, const fs::path& base) {
  for (std::string* p : {&cfg.paths.corpus, &cfg.paths.rollouts, &cfg.paths.scores, &cfg.paths.buckets,
                         &cfg.paths.checkpoints, &cfg.paths.reports, &cfg.trainer.eval_problems}) {
    resolve(*p, base);
  }
  for (auto& s : cfg.stages) {
    for (auto& m : s.mix) resolve(m.path, base);
  }
}

StageConfig materialize(const StageSpec& spec) {
  StageConfig st;
  st.name = spec.name;
  for (const auto& m : spec.mix) st.mix.push_back({m.name, read_corpus(m.path), m.weight});
  st.max_rollout_len = spec.max_rollout_len;
  st.entropy_enabled = spec.entropy_enabled;
  st.exclude_truncated_from_loss = spec.exclude_truncated_from_loss;
  st.steps_max = spec.steps_max;
  st.plateau = spec.plateau;
  return st;
}

}  // namespace stagerl
