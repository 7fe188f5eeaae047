#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "fuzzyppo/fuzzy_policy.hpp"
#include "fuzzyppo/rollout.hpp"

namespace fuzzyppo {

struct TrainConfig {
  double gamma = 0.99;
  double lr = 1e-5;
  double clip_eps = 0.2;
  double entropy_coef = 0.02;
  double value_coef = 0.5;
  std::size_t minibatch_size = 64;
  std::size_t horizon = 2048;
  double grad_clip = 10.0;
  std::size_t epochs = 10;
  double gae_lambda = 0.95;
  std::size_t total_updates = 100000;
  std::size_t eval_every = 500;
  std::size_t eval_episodes = 10;
  std::uint64_t seed = 42;
  bool adv_norm = true;
  int tsk_order = 1;
  ConsequentInput consequent_input = ConsequentInput::kFeatures;
  std::size_t hidden_units = 128;
  std::size_t num_features = 127;
  std::size_t num_rules = 16;

  PolicyConfig policy_config() const;
  CriticConfig critic_config() const { return {}; }
  // Minibatch updates per collected rollout.
  std::size_t updates_per_iteration() const { return epochs * (horizon / minibatch_size); }
  // Outer iterations needed to reach total_updates (the last one runs to completion).
  std::size_t iterations() const;
};

// Throws ContractViolation whose message starts with the offending field name.
void validate(const TrainConfig& config);

// min(r A, clip(r, 1 - eps, 1 + eps) A)
double clip_surrogate(double ratio, double advantage, double eps);

struct UpdateMetrics {
  double loss_total = 0.0;
  double loss_clip = 0.0;  // -mean(clip_surrogate)
  double loss_value = 0.0;
  double entropy = 0.0;
  double grad_norm_preclip = 0.0;
  double approx_kl = 0.0;  // mean(log pi_old - log pi_new)
  double clip_fraction = 0.0;
  double mean_abs_ratio_deviation = 0.0;  // mean |r - 1|
};

// Evaluates the PPO loss on the buffer rows `indices`
//   L = -mean(clip_surrogate) + c_v mean(0.5 (R - V)^2) - c_e mean(H)
// and, if `accumulate_grads`, adds dL/dparams into agent.store grads.
// Throws NumericError on a non-finite loss.
UpdateMetrics ppo_loss(ActorCritic& agent, const RolloutBuffer& buf,
                       std::span<const std::size_t> indices, const TrainConfig& config,
                       bool accumulate_grads);

// One optimizer step: zero grads, loss + backward, joint clip + Adam, sigma clamp.
UpdateMetrics ppo_minibatch_update(ActorCritic& agent, const RolloutBuffer& buf,
                                   std::span<const std::size_t> indices,
                                   const TrainConfig& config);

}  // namespace fuzzyppo
