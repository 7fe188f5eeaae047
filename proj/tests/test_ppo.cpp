#include <omp.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "fuzzyppo/ppo.hpp"
#include "fuzzyppo/trainer.hpp"
#include "oracles.hpp"

using namespace fuzzyppo;

namespace {

TrainConfig tiny_config() {
  TrainConfig c;
  c.hidden_units = 16;
  c.num_features = 12;
  c.num_rules = 4;
  c.horizon = 256;
  c.minibatch_size = 64;
  c.epochs = 2;
  c.total_updates = 24;
  c.eval_every = 8;
  c.eval_episodes = 3;
  c.lr = 1e-3;
  c.seed = 5;
  return c;
}

struct Collected {
  ActorCritic agent;
  RolloutBuffer buf;
};

Collected collect(const TrainConfig& c) {
  Rng init(c.seed);
  Collected out{make_actor_critic(c.policy_config(), c.critic_config(), init), {}};
  EnvRunner<CartPole> runner{CartPole{}};
  Rng rng(c.seed + 1);
  out.buf = collect_rollout(runner, out.agent, c.horizon, rng);
  compute_returns_advantages(out.buf, c.gamma, c.gae_lambda);
  normalize_advantages(out.buf.advantages);
  return out;
}

}  // namespace

TEST_CASE("clip_surrogate examples") {
  CHECK(clip_surrogate(1.0, 2.0, 0.2) == 2.0);
  CHECK(clip_surrogate(1.5, 1.0, 0.2) == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(clip_surrogate(0.5, -1.0, 0.2) == doctest::Approx(-0.8).epsilon(1e-15));
}

TEST_CASE("clipping never increases the objective") {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double r = std::exp(rng.uniform(-3, 3)), a = rng.uniform(-5, 5), eps = rng.uniform(0.01, 0.9);
    CHECK(clip_surrogate(r, a, eps) <= r * a);
    CHECK(clip_surrogate(r, a, eps) == oracles::clipped_objective(r, a, eps));
  }
}

TEST_CASE("training config arithmetic") {
  TrainConfig c;
  CHECK(c.updates_per_iteration() == 320);
  CHECK(c.iterations() == 313);
  CHECK(c.iterations() * c.updates_per_iteration() >= 100000);
  validate(c);

  TrainConfig bad = c;
  bad.minibatch_size = 100;
  CHECK_THROWS_WITH_AS(validate(bad), doctest::Contains("minibatch_size"), ContractViolation);
  bad = c;
  bad.clip_eps = 1.5;
  CHECK_THROWS_WITH_AS(validate(bad), doctest::Contains("clip_eps"), ContractViolation);
}

TEST_CASE("ratios are exactly one right after collection") {
  const TrainConfig c = tiny_config();
  Collected col = collect(c);
  std::vector<std::size_t> idx(64);
  std::iota(idx.begin(), idx.end(), std::size_t{100});
  const UpdateMetrics m = ppo_minibatch_update(col.agent, col.buf, idx, c);
  CHECK(m.mean_abs_ratio_deviation < 1e-12);
  CHECK(m.clip_fraction == 0.0);
  CHECK(std::abs(m.approx_kl) < 1e-12);
}

TEST_CASE("zero advantages with no value or entropy terms leave parameters unchanged") {
  TrainConfig c = tiny_config();
  c.value_coef = 0.0;
  c.entropy_coef = 0.0;
  Collected col = collect(c);
  std::fill(col.buf.advantages.begin(), col.buf.advantages.end(), 0.0);
  const ParamStore before = col.agent.store;
  std::vector<std::size_t> idx(64);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const UpdateMetrics m = ppo_minibatch_update(col.agent, col.buf, idx, c);
  CHECK(m.grad_norm_preclip == 0.0);
  for (std::size_t i = 0; i < before.num_entries(); ++i) {
    CHECK(before.entries()[i].value == col.agent.store.entries()[i].value);
  }
}

TEST_CASE("single-sample loss equals the hand-assembled three-term sum") {
  TrainConfig c = tiny_config();
  Collected col = collect(c);
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t t = rng.next_u64() % col.buf.size();
    col.buf.log_probs_old[t] += rng.uniform(-0.5, 0.5);
    const std::size_t idx[1] = {t};
    const UpdateMetrics m = ppo_loss(col.agent, col.buf, idx, c, false);

    const PolicyOutput out = policy_forward(col.agent.store, col.agent.policy, col.buf.states[t]);
    const double v = value_forward(col.agent.store, col.agent.critic, col.buf.states[t]);
    const double ratio =
        std::exp(out.log_probs[static_cast<std::size_t>(col.buf.actions[t])] - col.buf.log_probs_old[t]);
    const double surrogate = oracles::clipped_objective(ratio, col.buf.advantages[t], c.clip_eps);
    const double value_loss = 0.5 * (col.buf.returns[t] - v) * (col.buf.returns[t] - v);
    const double expected = -surrogate + c.value_coef * value_loss - c.entropy_coef * out.entropy;
    CHECK(m.loss_total == doctest::Approx(expected).epsilon(1e-12));
    CHECK(m.loss_value == doctest::Approx(value_loss).epsilon(1e-12));
    CHECK(m.entropy == doctest::Approx(out.entropy).epsilon(1e-12));
  }
}

TEST_CASE("a non-finite loss aborts the update") {
  TrainConfig c = tiny_config();
  Collected col = collect(c);
  col.agent.store[col.agent.critic.c3].value[0] = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> idx(64);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  CHECK_THROWS_AS(ppo_minibatch_update(col.agent, col.buf, idx, c), NumericError);
}

TEST_CASE("evaluation of a fixed policy") {
  const ActionFn push_right = [](const State&) { return 1; };
  const EvalResult r = evaluate(push_right, 10, 42, 0);
  REQUIRE(r.returns.size() == 10);
  CHECK(r.mean_return == doctest::Approx(std::accumulate(r.returns.begin(), r.returns.end(), 0.0) / 10.0));
  CHECK(r.mean_return < 50.0);
  for (double x : r.returns) CHECK(x <= 500.0);

  const ActionFn balance = [](const State& s) { return s.theta + 0.5 * s.theta_dot > 0.0 ? 1 : 0; };
  const EvalResult good = evaluate(balance, 10, 42, 0);
  for (double x : good.returns) CHECK(x <= 500.0);

  const int saved = omp_get_max_threads();
  omp_set_num_threads(4);
  const EvalResult threaded = evaluate(push_right, 10, 42, 0);
  omp_set_num_threads(saved);
  CHECK(threaded.returns == r.returns);
}

TEST_CASE("train is deterministic and counts minibatch updates") {
  const TrainConfig c = tiny_config();
  const TrainResult a = train(c);
  const TrainResult b = train(c);
  REQUIRE(a.log.updates.size() == b.log.updates.size());
  // 256 / 64 = 4 minibatches x 2 epochs = 8 updates per iteration; 24 updates = 3 iterations.
  CHECK(a.log.updates.size() == 24);
  CHECK(a.log.updates.back().update_idx == 24);
  CHECK(a.log.updates.back().iteration == 3);
  for (std::size_t i = 0; i < a.log.updates.size(); ++i) {
    CHECK(a.log.updates[i].update_idx == i + 1);
    CHECK(std::memcmp(&a.log.updates[i].metrics, &b.log.updates[i].metrics, sizeof(UpdateMetrics)) == 0);
    if (a.log.updates[i].first_after_collection) {
      CHECK(a.log.updates[i].metrics.mean_abs_ratio_deviation < 1e-12);
      CHECK(a.log.updates[i].metrics.clip_fraction == 0.0);
    }
  }
  std::vector<std::size_t> eval_points;
  for (const auto& e : a.log.evals) eval_points.push_back(e.update_idx);
  CHECK(eval_points == std::vector<std::size_t>{0, 8, 16, 24});
  for (std::size_t i = 0; i < a.log.evals.size(); ++i) {
    CHECK(a.log.evals[i].result.returns == b.log.evals[i].result.returns);
  }
  for (std::size_t i = 0; i < a.agent.store.num_entries(); ++i) {
    CHECK(a.agent.store.entries()[i].value == b.agent.store.entries()[i].value);
  }
}

TEST_CASE("the budget runs the last iteration to completion") {
  TrainConfig c = tiny_config();
  c.total_updates = 10;  // 8 per iteration -> 2 iterations, 16 updates
  c.eval_every = 100;
  const TrainResult r = train(c);
  CHECK(r.log.updates.back().update_idx == 16);
  CHECK(r.log.evals.size() == 2);
  CHECK(r.log.evals.back().update_idx == 16);
}

TEST_CASE("evaluations do not perturb the training trajectory") {
  TrainConfig frequent = tiny_config();
  frequent.eval_every = 1;
  TrainConfig rare = tiny_config();
  rare.eval_every = 1000;
  const TrainResult a = train(frequent);
  const TrainResult b = train(rare);
  REQUIRE(a.log.updates.size() == b.log.updates.size());
  for (std::size_t i = 0; i < a.log.updates.size(); ++i) {
    CHECK(std::memcmp(&a.log.updates[i].metrics, &b.log.updates[i].metrics, sizeof(UpdateMetrics)) == 0);
  }
}
