#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "fuzzyppo/cartpole.hpp"
#include "fuzzyppo/fuzzy_policy.hpp"
#include "fuzzyppo/ppo.hpp"

namespace fuzzyppo {

struct UpdateRecord {
  std::size_t update_idx = 0;  // 1-based count of minibatch updates applied
  std::size_t iteration = 0;   // 1-based rollout index
  bool first_after_collection = false;
  UpdateMetrics metrics;
};

struct EvalResult {
  double mean_return = 0.0;
  double stddev = 0.0;
  std::vector<double> returns;
};

struct EvalRecord {
  std::size_t update_idx = 0;
  EvalResult result;
};

struct TrainLog {
  std::vector<UpdateRecord> updates;
  std::vector<EvalRecord> evals;
};

// Hooks for streaming a run to disk as it progresses.
class TrainObserver {
 public:
  virtual ~TrainObserver() = default;
  virtual void on_update(const UpdateRecord&) {}
  virtual void on_eval(const EvalRecord&, const ActorCritic&) {}
  virtual void on_finish(const ActorCritic&) {}
};

using ActionFn = std::function<int(const State&)>;

// Runs `episodes` full episodes of `act`. Episode i starts from a reset
// drawn from the stream (seed, kEvaluation, update_idx, i), so results do
// not depend on any other rng and episodes may run in parallel.
// `act` must be safe to call concurrently.
EvalResult evaluate(const ActionFn& act, std::size_t episodes, std::uint64_t seed,
                    std::uint64_t update_idx, const EnvParams& env = {});

// Greedy (argmax) evaluation of the agent's policy.
EvalResult evaluate(const ActorCritic& agent, std::size_t episodes, std::uint64_t seed,
                    std::uint64_t update_idx, const EnvParams& env = {});

struct TrainResult {
  TrainLog log;
  ActorCritic agent;
};

// Initializes an agent from config.seed and runs the PPO loop. Evaluations
// happen at update 0 and every eval_every updates; a last one follows the
// final update if it was not already an evaluation point.
TrainResult train(const TrainConfig& config, TrainObserver* observer = nullptr);

}  // namespace fuzzyppo
