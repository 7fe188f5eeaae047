#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fuzzyppo/cartpole.hpp"
#include "fuzzyppo/fuzzy_policy.hpp"
#include "fuzzyppo/rng.hpp"

namespace fuzzyppo {

// One horizon of on-policy experience. Episodes may span buffer boundaries.
struct RolloutBuffer {
  std::vector<State> states;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<std::uint8_t> terminated;
  std::vector<std::uint8_t> truncated;
  std::vector<double> log_probs_old;
  std::vector<double> values;
  // Critic value of the post-truncation state; meaningful only where truncated[t].
  std::vector<double> truncation_values;
  // Critic value of the state after the last transition (0 if that transition ended its episode).
  double bootstrap_value = 0.0;

  std::vector<double> returns;
  std::vector<double> advantages;

  std::size_t size() const { return states.size(); }
  void clear();
};

template <class E>
concept Environment = requires(E& env, Rng& rng, int action) {
  { env.reset(rng) } -> std::convertible_to<State>;
  { env.step(action) } -> std::convertible_to<StepOutcome>;
};

// Carries an environment across rollouts: the episode in progress at the end
// of one buffer continues into the next.
template <Environment Env>
class EnvRunner {
 public:
  explicit EnvRunner(Env env) : env_(std::move(env)) {}

  Env& env() { return env_; }

  // Starts a new episode if none is running; returns the current state.
  const State& current(Rng& rng) {
    if (needs_reset_) {
      state_ = env_.reset(rng);
      needs_reset_ = false;
    }
    return state_;
  }

  StepOutcome step(int action) {
    StepOutcome out = env_.step(action);
    state_ = out.next_state;
    needs_reset_ = out.done();
    return out;
  }

  bool episode_running() const { return !needs_reset_; }

 private:
  Env env_;
  State state_{};
  bool needs_reset_ = true;
};

// Collects `horizon` transitions with sampled actions, recording the
// behaviour log-probabilities and critic values at collection time.
template <Environment Env>
RolloutBuffer collect_rollout(EnvRunner<Env>& runner, const ActorCritic& agent,
                              std::size_t horizon, Rng& rng) {
  RolloutBuffer buf;
  buf.states.reserve(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    const State s = runner.current(rng);
    const PolicyOutput out = policy_forward(agent.store, agent.policy, s);
    const ActionSample a = sample_action(out, rng);
    const double v = value_forward(agent.store, agent.critic, s);
    const StepOutcome step = runner.step(a.action);

    buf.states.push_back(s);
    buf.actions.push_back(a.action);
    buf.rewards.push_back(step.reward);
    buf.terminated.push_back(step.terminated ? 1 : 0);
    buf.truncated.push_back(step.truncated ? 1 : 0);
    buf.log_probs_old.push_back(a.log_prob);
    buf.values.push_back(v);
    buf.truncation_values.push_back(
        step.truncated ? value_forward(agent.store, agent.critic, step.next_state) : 0.0);
  }
  buf.bootstrap_value = runner.episode_running()
                            ? value_forward(agent.store, agent.critic, runner.current(rng))
                            : 0.0;
  return buf;
}

// Generalized advantage estimation over spans:
//   next_v_t = truncation_values[t] if truncated, else values[t+1]
//              (bootstrap_value for the last step), and 0 if terminated;
//   delta_t  = r_t + gamma next_v_t - V_t
//   A_t      = delta_t + gamma lambda (1 - done_t) A_{t+1}
void generalized_advantages(std::span<const double> rewards, std::span<const double> values,
                            std::span<const std::uint8_t> terminated,
                            std::span<const std::uint8_t> truncated,
                            std::span<const double> truncation_values, double bootstrap_value,
                            double gamma, double lambda, std::span<double> advantages);

// Fills buf.advantages with GAE and buf.returns with A_t + V_t.
void compute_returns_advantages(RolloutBuffer& buf, double gamma, double lambda);

// Shifts and scales advantages to mean 0 and (population) std 1. A
// constant advantage vector is only centered.
void normalize_advantages(std::span<double> advantages);

}  // namespace fuzzyppo
