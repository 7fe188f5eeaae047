#include "fuzzyppo/trainer.hpp"

#include <cmath>
#include <numeric>

#include "fuzzyppo/rng.hpp"
#include "fuzzyppo/rollout.hpp"

namespace fuzzyppo {

EvalResult evaluate(const ActionFn& act, std::size_t episodes, std::uint64_t seed,
                    std::uint64_t update_idx, const EnvParams& env_params) {
  EvalResult r;
  r.returns.assign(episodes, 0.0);
  const auto count = static_cast<std::ptrdiff_t>(episodes);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    Rng rng = Rng::derive({seed, static_cast<std::uint64_t>(StreamTag::kEvaluation), update_idx,
                           static_cast<std::uint64_t>(i)});
    CartPole env(env_params);
    State s = env.reset(rng);
    double total = 0.0;
    while (true) {
      const StepOutcome out = env.step(act(s));
      total += out.reward;
      if (out.done()) break;
      s = out.next_state;
    }
    r.returns[static_cast<std::size_t>(i)] = total;
  }
  const double n = static_cast<double>(episodes);
  r.mean_return = std::accumulate(r.returns.begin(), r.returns.end(), 0.0) / n;
  double var = 0.0;
  for (double x : r.returns) var += (x - r.mean_return) * (x - r.mean_return);
  r.stddev = std::sqrt(var / n);
  return r;
}

EvalResult evaluate(const ActorCritic& agent, std::size_t episodes, std::uint64_t seed,
                    std::uint64_t update_idx, const EnvParams& env) {
  const ActionFn greedy = [&agent](const State& s) {
    return deterministic_action(policy_forward(agent.store, agent.policy, s));
  };
  return evaluate(greedy, episodes, seed, update_idx, env);
}

TrainResult train(const TrainConfig& config, TrainObserver* observer) {
  validate(config);
  Rng init_rng = Rng::derive({config.seed, static_cast<std::uint64_t>(StreamTag::kInit)});
  Rng rollout_rng = Rng::derive({config.seed, static_cast<std::uint64_t>(StreamTag::kRollout)});
  Rng shuffle_rng = Rng::derive({config.seed, static_cast<std::uint64_t>(StreamTag::kShuffle)});

  TrainResult result{{}, make_actor_critic(config.policy_config(), config.critic_config(), init_rng)};
  ActorCritic& agent = result.agent;
  TrainLog& log = result.log;

  auto run_eval = [&](std::size_t update_idx) {
    EvalRecord rec{update_idx, evaluate(agent, config.eval_episodes, config.seed, update_idx)};
    log.evals.push_back(rec);
    if (observer) observer->on_eval(log.evals.back(), agent);
  };

  run_eval(0);

  EnvRunner<CartPole> runner{CartPole{}};
  std::vector<std::size_t> order(config.horizon);
  const std::size_t minibatches = config.horizon / config.minibatch_size;
  std::size_t update_idx = 0;

  for (std::size_t iteration = 1; update_idx < config.total_updates; ++iteration) {
    RolloutBuffer buf = collect_rollout(runner, agent, config.horizon, rollout_rng);
    compute_returns_advantages(buf, config.gamma, config.gae_lambda);
    if (config.adv_norm) normalize_advantages(buf.advantages);

    bool first = true;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      shuffle_rng.shuffle(std::span<std::size_t>(order));
      for (std::size_t mb = 0; mb < minibatches; ++mb) {
        const std::span<const std::size_t> idx(order.data() + mb * config.minibatch_size,
                                               config.minibatch_size);
        UpdateRecord rec;
        rec.metrics = ppo_minibatch_update(agent, buf, idx, config);
        rec.update_idx = ++update_idx;
        rec.iteration = iteration;
        rec.first_after_collection = first;
        first = false;
        log.updates.push_back(rec);
        if (observer) observer->on_update(rec);
        if (update_idx % config.eval_every == 0) run_eval(update_idx);
      }
    }
  }
  if (log.evals.back().update_idx != update_idx) run_eval(update_idx);
  if (observer) observer->on_finish(agent);
  return result;
}

}  // namespace fuzzyppo
