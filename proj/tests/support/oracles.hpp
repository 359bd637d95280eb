// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the code it is used to check.
#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stagerl/corpus.hpp"
#include "stagerl/grpo.hpp"
#include "stagerl/toy_policy.hpp"

namespace oracle {

// ---- difficulty levels ----

// Z = pass rate 0, P = strictly between 0 and 1, F = 1.
inline char rate_class(double r) { return r == 0 ? 'Z' : (r == 1 ? 'F' : 'P'); }

struct Expected {
  const char* level;
  const char* reason;
};

// Keyed by the classes of (1.5b, 7b, 32b) for problems the r1 tier does not
// fail completely. Written out by hand from the level definitions.
inline const std::map<std::string, Expected>& level_table() {
  static const std::map<std::string, Expected> table = {
      {"ZZZ", {"level3", "32b fails"}},
      {"ZZP", {"unassigned", "no clause matched"}},
      {"ZZF", {"level3", "32b solves"}},
      {"ZPZ", {"level2", "1.5b fails, 7b partial"}},
      {"ZPP", {"level2", "1.5b fails, 7b partial"}},
      {"ZPF", {"level2", "1.5b fails, 7b partial"}},
      {"ZFZ", {"level2", "1.5b fails, 7b full"}},
      {"ZFP", {"level2", "1.5b fails, 7b full"}},
      {"ZFF", {"level2", "1.5b fails, 7b full"}},
      {"PZZ", {"level1", "1.5b partial"}},
      {"PZP", {"level1", "1.5b partial"}},
      {"PZF", {"level1", "1.5b partial"}},
      {"PPZ", {"level1", "1.5b partial"}},
      {"PPP", {"level1", "1.5b partial"}},
      {"PPF", {"level1", "1.5b partial"}},
      {"PFZ", {"level1", "1.5b partial"}},
      {"PFP", {"level1", "1.5b partial"}},
      {"PFF", {"level1", "1.5b partial"}},
      {"FZZ", {"level3", "32b fails"}},
      {"FZP", {"unassigned", "no clause matched"}},
      {"FZF", {"level3", "32b solves"}},
      {"FPZ", {"level3", "32b fails"}},
      {"FPP", {"unassigned", "no clause matched"}},
      {"FPF", {"level3", "32b solves"}},
      {"FFZ", {"level3", "32b fails"}},
      {"FFP", {"unassigned", "no clause matched"}},
      {"FFF", {"level3", "32b solves"}},
  };
  return table;
}

inline Expected expected_level(double small, double mid, double large, double r1) {
  if (r1 == 0) return {"discarded", "r1 pass rate 0"};
  const std::string key{rate_class(small), rate_class(mid), rate_class(large)};
  return level_table().at(key);
}

// ---- pass@1 ----

// Mean over the full runs x problems matrix, accumulated cell by cell.
inline double brute_force_pass_at_1(const std::vector<std::vector<bool>>& passed) {
  long double sum = 0;
  std::size_t cells = 0;
  for (const auto& row : passed) {
    for (bool b : row) {
      sum += b ? 1 : 0;
      ++cells;
    }
  }
  return static_cast<double>(sum / cells);
}

// ---- GRPO objective ----

// Per-position log-distributions computed one context at a time through
// the public logprobs() entry point.
inline std::vector<std::vector<double>> rows(const stagerl::PolicyParams& p, const std::vector<stagerl::TokenId>& prompt,
                                             const std::vector<stagerl::TokenId>& tokens) {
  std::vector<std::vector<double>> out;
  std::vector<stagerl::TokenId> ctx = prompt;
  for (auto t : tokens) {
    out.push_back(stagerl::logprobs(p, ctx));
    ctx.push_back(t);
  }
  return out;
}

// The objective written directly from its definition (per-rollout
// averaging): -(1/N) sum_i a_i sum_t log pi + kl * (1/N) sum_i mean_t k_t
// - ent * (1/N) sum_i mean_t H_t, over unmasked rollouts.
inline double grpo_objective(const stagerl::PolicyParams& p, const stagerl::PolicyParams& ref,
                             const std::vector<stagerl::RolloutGroup>& groups, const stagerl::GrpoConfig& cfg) {
  int n = 0;
  for (const auto& g : groups) {
    for (bool m : g.loss_mask) n += m;
  }
  if (n == 0) return 0;
  double pg = 0, kl = 0, ent = 0;
  for (const auto& g : groups) {
    for (std::size_t i = 0; i < g.rollouts.size(); ++i) {
      if (!g.loss_mask[i]) continue;
      const auto& toks = *g.rollouts[i].token_ids;
      if (toks.empty()) continue;
      const auto lp = rows(p, g.prompt, toks);
      const auto lr = rows(ref, g.prompt, toks);
      double s = 0, k = 0, h = 0;
      for (std::size_t t = 0; t < toks.size(); ++t) {
        s += lp[t][toks[t]];
        const double d = lr[t][toks[t]] - lp[t][toks[t]];
        k += std::exp(d) - d - 1;
        for (double v : lp[t]) h -= std::exp(v) * v;
      }
      pg -= g.advantages[i] * s;
      kl += k / toks.size();
      ent += h / toks.size();
    }
  }
  return (pg + cfg.kl_coef * kl - cfg.entropy_coef * ent) / n;
}

// ---- finite differences ----

// Relative error with a small floor so coordinates whose true derivative is
// essentially zero are compared absolutely.
inline double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

// Central differences of f over every coordinate of p, step h. Returns the
// largest relative error against `analytic`.
template <typename F>
double max_fd_error(stagerl::PolicyParams p, const stagerl::PolicyParams& analytic, F&& f, double h = 1e-5) {
  double worst = 0;
  auto& v = p.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double keep = v[i];
    v[i] = keep + h;
    const double up = f(p);
    v[i] = keep - h;
    const double down = f(p);
    v[i] = keep;
    worst = std::max(worst, rel_error(analytic.values()[i], (up - down) / (2 * h)));
  }
  return worst;
}

// ---- data files ----

inline std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<nlohmann::json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

}  // namespace oracle
