#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "stagerl/grpo.hpp"
#include "stagerl/rng.hpp"

using namespace stagerl;

namespace {

const PolicyShape kShape{5, 3, 4};

Rollout rollout(std::vector<TokenId> t, bool truncated = false) {
  Rollout r;
  r.token_ids = std::move(t);
  r.truncated = truncated;
  return r;
}

// Random groups with random token sequences and rewards in {0, 0.5, 1}.
std::vector<RolloutGroup> random_groups(Engine& e, int groups, int size, const GrpoConfig& cfg) {
  std::vector<RolloutGroup> out;
  for (int g = 0; g < groups; ++g) {
    std::vector<TokenId> prompt(1 + uniform_index(e, 3));
    for (auto& t : prompt) t = TokenId(uniform_index(e, kShape.vocab));
    std::vector<Rollout> rs;
    std::vector<double> rewards;
    for (int i = 0; i < size; ++i) {
      std::vector<TokenId> toks(1 + uniform_index(e, 4));
      for (auto& t : toks) t = TokenId(uniform_index(e, kShape.vocab));
      rs.push_back(rollout(toks, uniform_index(e, 4) == 0));
      rewards.push_back(0.5 * double(uniform_index(e, 3)));
    }
    out.push_back(make_group("g" + std::to_string(g), prompt, rs, rewards, cfg));
  }
  return out;
}

// Per-token averaging written out directly: every term is divided by the
// total number of unmasked tokens.
double per_token_objective(const PolicyParams& p, const PolicyParams& ref, const std::vector<RolloutGroup>& groups,
                           const GrpoConfig& cfg) {
  long n = 0;
  for (const auto& g : groups) {
    for (std::size_t i = 0; i < g.rollouts.size(); ++i) n += g.loss_mask[i] ? long(g.rollouts[i].token_ids->size()) : 0;
  }
  if (n == 0) return 0;
  double total = 0;
  for (const auto& g : groups) {
    for (std::size_t i = 0; i < g.rollouts.size(); ++i) {
      if (!g.loss_mask[i]) continue;
      const auto& toks = *g.rollouts[i].token_ids;
      const auto lp = oracle::rows(p, g.prompt, toks);
      const auto lr = oracle::rows(ref, g.prompt, toks);
      for (std::size_t t = 0; t < toks.size(); ++t) {
        const double d = lr[t][toks[t]] - lp[t][toks[t]];
        double h = 0;
        for (double v : lp[t]) h -= std::exp(v) * v;
        total += -g.advantages[i] * lp[t][toks[t]] + cfg.kl_coef * (std::exp(d) - d - 1) - cfg.entropy_coef * h;
      }
    }
  }
  return total / double(n);
}

}  // namespace

TEST_CASE("group advantages examples") {
  const auto a = group_advantages(std::vector<double>{1, 0, 1, 0}, 1e-6);
  for (std::size_t i = 0; i < 4; ++i) CHECK(a[i] == doctest::Approx(i % 2 ? -1.0 : 1.0).epsilon(1e-5));
  for (double v : group_advantages(std::vector<double>{0.7, 0.7, 0.7}, 1e-6)) CHECK(v == 0.0);
  const auto b = group_advantages(std::vector<double>{1, 0, 0, 0}, 0);
  CHECK(b[0] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
  for (int i = 1; i < 4; ++i) CHECK(b[i] == doctest::Approx(-1 / std::sqrt(3.0)).epsilon(1e-12));
  CHECK_THROWS_AS(group_advantages(std::vector<double>{1}, 1e-6), std::invalid_argument);
}

TEST_CASE("advantages have mean 0 and unit spread, and ignore reward shifts") {
  Engine e(3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> r(2 + uniform_index(e, 15));
    for (auto& v : r) v = u01(e) * 4 - 2;
    const auto a = group_advantages(r, 0);
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
    double sq = 0;
    for (double v : a) sq += v * v;
    CHECK(std::abs(mean) < 1e-12);
    CHECK(sq / a.size() == doctest::Approx(1.0).epsilon(1e-10));
    auto shifted = r;
    const double c = u01(e) * 10 - 5;
    for (auto& v : shifted) v += c;
    const auto b = group_advantages(shifted, 0);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-9);
  }
}

TEST_CASE("KL estimate") {
  const std::vector<double> x = {-0.3, -1.2, -2.0};
  CHECK(kl_estimate(x, x) == 0.0);
  CHECK(kl_estimate(std::vector<double>{0.0}, std::vector<double>{std::log(2.0)}) ==
        doctest::Approx(1 - std::log(2.0)).epsilon(1e-12));
  CHECK(kl_estimate(std::vector<double>{}, std::vector<double>{}) == 0.0);
  Engine e(5);
  for (int i = 0; i < 1000; ++i) {
    const double p = -5 * u01(e), r = -5 * u01(e);
    CHECK(kl_estimate(std::vector<double>{p}, std::vector<double>{r}) >= 0.0);
  }
}

TEST_CASE("entropy of a log distribution") {
  for (int v : {2, 5, 100}) {
    const std::vector<double> lp(v, -std::log(double(v)));
    CHECK(std::abs(entropy_of(lp) - std::log(double(v))) <= 1e-9);
  }
  CHECK(entropy_of(std::vector<double>{std::log(0.75), std::log(0.25)}) == doctest::Approx(0.5623351446).epsilon(1e-9));
  CHECK(entropy_of(std::vector<double>{0.0, -INFINITY}) == 0.0);
}

TEST_CASE("loss agrees with the directly written objective") {
  Engine e(11);
  for (int trial = 0; trial < 30; ++trial) {
    GrpoConfig cfg;
    cfg.kl_coef = u01(e);
    cfg.entropy_coef = u01(e);
    cfg.exclude_truncated_from_loss = trial % 2;
    const auto p = PolicyParams::random(kShape, trial, 0.8);
    const auto ref = PolicyParams::random(kShape, 100 + trial, 0.8);
    const auto groups = random_groups(e, 2, 4, cfg);
    const double want = oracle::grpo_objective(p, ref, groups, cfg);
    CHECK(grpo_loss(p, ref, groups, cfg).loss == doctest::Approx(want).epsilon(1e-12));
    CHECK(grpo_loss_and_grad(p, ref, groups, cfg).terms.loss == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("gradient matches central differences on 60 configurations") {
  Engine e(21);
  double worst = 0;
  for (int trial = 0; trial < 60; ++trial) {
    GrpoConfig cfg;
    if (trial >= 10) {  // the first ten keep kl = entropy = 0.001
      cfg.kl_coef = u01(e) * 0.5;
      cfg.entropy_coef = u01(e) * 0.5;
    }
    cfg.exclude_truncated_from_loss = trial % 3 == 0;
    cfg.per_token_average = trial % 4 == 1;
    const auto p = PolicyParams::random(kShape, 500 + trial, 0.8);
    const auto ref = PolicyParams::random(kShape, 900 + trial, 0.8);
    const auto groups = random_groups(e, 1 + trial % 2, 3 + trial % 3, cfg);
    const auto lg = grpo_loss_and_grad(p, ref, groups, cfg);
    const double err = oracle::max_fd_error(p, lg.grad, [&](const PolicyParams& q) {
      return cfg.per_token_average ? per_token_objective(q, ref, groups, cfg) : oracle::grpo_objective(q, ref, groups, cfg);
    });
    INFO("trial " << trial);
    CHECK(err <= 1e-4);
    worst = std::max(worst, err);
  }
  MESSAGE("worst relative error " << worst);
}

TEST_CASE("per-token averaging agrees with its direct form") {
  Engine e(31);
  GrpoConfig cfg;
  cfg.per_token_average = true;
  cfg.kl_coef = 0.3;
  cfg.entropy_coef = 0.2;
  const auto p = PolicyParams::random(kShape, 1, 0.8), ref = PolicyParams::random(kShape, 2, 0.8);
  const auto groups = random_groups(e, 3, 4, cfg);
  CHECK(grpo_loss(p, ref, groups, cfg).loss == doctest::Approx(per_token_objective(p, ref, groups, cfg)).epsilon(1e-12));
}

TEST_CASE("two-rollout example pushes toward the rewarded answer") {
  // One-step rollouts, rewards [1, 0]: advantages are +-1 and, at zero
  // parameters, the output-bias gradient is -(1/2)(onehot(a) - onehot(b)).
  GrpoConfig cfg;
  cfg.kl_coef = 0;
  cfg.entropy_coef = 0;
  const PolicyParams p(kShape);
  const auto g = make_group("x", {1}, {rollout({2}), rollout({3})}, {1, 0}, cfg);
  CHECK(g.advantages[0] == doctest::Approx(1).epsilon(1e-5));
  CHECK(g.advantages[1] == doctest::Approx(-1).epsilon(1e-5));
  const auto lg = grpo_loss_and_grad(p, p, std::vector<RolloutGroup>{g}, cfg);
  CHECK(lg.grad.b_out(2) == doctest::Approx(-0.5).epsilon(1e-5));
  CHECK(lg.grad.b_out(3) == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(lg.grad.b_out(0) == doctest::Approx(0).epsilon(1e-12));
}

TEST_CASE("masked rollouts do not affect the loss or gradient, bit for bit") {
  Engine e(41);
  GrpoConfig cfg;
  cfg.exclude_truncated_from_loss = true;
  cfg.kl_coef = 0.1;
  cfg.entropy_coef = 0.05;
  const auto p = PolicyParams::random(kShape, 7, 0.8), ref = PolicyParams::random(kShape, 8, 0.8);
  for (int trial = 0; trial < 50; ++trial) {
    auto groups = random_groups(e, 2, 5, cfg);
    const auto base = grpo_loss_and_grad(p, ref, groups, cfg);
    // Arbitrary changes to the masked rollouts' tokens and rewards.
    for (auto& g : groups) {
      for (std::size_t i = 0; i < g.rollouts.size(); ++i) {
        if (g.loss_mask[i]) continue;
        auto& toks = *g.rollouts[i].token_ids;
        toks.push_back(TokenId(uniform_index(e, kShape.vocab)));
        toks[0] = TokenId(uniform_index(e, kShape.vocab));
        g.rewards[i] = 100 * u01(e);
      }
    }
    const auto after = grpo_loss_and_grad(p, ref, groups, cfg);
    CHECK(after.terms.loss == base.terms.loss);
    CHECK(after.grad == base.grad);
  }
}

TEST_CASE("masked rewards do not leak into advantages") {
  GrpoConfig cfg;
  cfg.exclude_truncated_from_loss = true;
  const auto a = make_group("x", {1}, {rollout({1}), rollout({2}), rollout({3}, true)}, {1, 0, 0}, cfg);
  const auto b = make_group("x", {1}, {rollout({1}), rollout({2}), rollout({3}, true)}, {1, 0, 57}, cfg);
  CHECK(a.advantages == b.advantages);
  CHECK(a.loss_mask == std::vector<bool>{true, true, false});
  CHECK(a.advantages[2] == 0.0);
  // Kept when the config does not exclude truncation.
  CHECK(make_group("x", {1}, {rollout({1}), rollout({3}, true)}, {1, 0}, GrpoConfig{}).loss_mask ==
        std::vector<bool>{true, true});
}

TEST_CASE("zero-signal batches leave the parameters bit-identical") {
  GrpoConfig cfg;
  cfg.kl_coef = 0;
  cfg.entropy_coef = 0;
  cfg.learning_rate = 0.5;
  auto p = PolicyParams::random(kShape, 9, 0.8);
  const auto before = p;
  std::vector<RolloutGroup> groups;
  for (double r : {0.0, 1.0}) {
    groups.push_back(make_group("z", {1, 2}, {rollout({1, 2}), rollout({3}), rollout({0, 4, 4})}, {r, r, r}, cfg));
  }
  const auto lg = grpo_loss_and_grad(p, p, groups, cfg);
  for (double v : lg.grad.values()) CHECK(v == 0.0);
  p.axpy(-cfg.learning_rate, lg.grad);
  CHECK(p == before);
}

TEST_CASE("no unmasked rollouts gives a zero loss and gradient") {
  GrpoConfig cfg;
  cfg.exclude_truncated_from_loss = true;
  const auto p = PolicyParams::random(kShape, 9, 0.8);
  const auto g = make_group("t", {1}, {rollout({1}, true), rollout({2}, true)}, {1, 0}, cfg);
  const auto lg = grpo_loss_and_grad(p, p, std::vector<RolloutGroup>{g}, cfg);
  CHECK(lg.terms.loss == 0.0);
  CHECK(lg.terms.active_rollouts == 0);
  for (double v : lg.grad.values()) CHECK(v == 0.0);
}

TEST_CASE("config validation") {
  GrpoConfig cfg;
  cfg.group_size = 1;
  CHECK_THROWS(validate(cfg));
  cfg = {};
  cfg.learning_rate = 0;
  CHECK_THROWS(validate(cfg));
  cfg = {};
  cfg.kl_coef = -1;
  CHECK_THROWS(validate(cfg));
  CHECK_NOTHROW(validate(GrpoConfig{}));
}
