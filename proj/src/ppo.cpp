#include "fuzzyppo/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "fuzzyppo/adam.hpp"
#include "fuzzyppo/error.hpp"
#include "fuzzyppo/tape.hpp"

namespace fuzzyppo {

PolicyConfig TrainConfig::policy_config() const {
  PolicyConfig p;
  p.hidden = hidden_units;
  p.features = num_features;
  p.rules = num_rules;
  p.tsk_order = tsk_order;
  p.consequent_input = consequent_input;
  return p;
}

std::size_t TrainConfig::iterations() const {
  const std::size_t per = updates_per_iteration();
  return (total_updates + per - 1) / per;
}

void validate(const TrainConfig& c) {
  auto check = [](bool ok, const char* field, const std::string& what) {
    if (!ok) throw ContractViolation(std::string(field) + ": " + what);
  };
  check(c.gamma > 0.0 && c.gamma <= 1.0, "gamma", "must lie in (0, 1]");
  check(c.lr > 0.0 && std::isfinite(c.lr), "lr", "must be positive");
  check(c.clip_eps > 0.0 && c.clip_eps < 1.0, "clip_eps", "must lie in (0, 1)");
  check(c.entropy_coef >= 0.0, "entropy_coef", "must be non-negative");
  check(c.value_coef >= 0.0, "value_coef", "must be non-negative");
  check(c.minibatch_size > 0, "minibatch_size", "must be positive");
  check(c.horizon > 0, "horizon", "must be positive");
  check(c.minibatch_size <= c.horizon && c.horizon % c.minibatch_size == 0, "minibatch_size",
        "must divide horizon");
  check(c.grad_clip > 0.0, "grad_clip", "must be positive");
  check(c.epochs > 0, "epochs", "must be positive");
  check(c.gae_lambda >= 0.0 && c.gae_lambda <= 1.0, "gae_lambda", "must lie in [0, 1]");
  check(c.total_updates > 0, "total_updates", "must be positive");
  check(c.eval_every > 0, "eval_every", "must be positive");
  check(c.eval_episodes > 0, "eval_episodes", "must be positive");
  check(c.tsk_order == 0 || c.tsk_order == 1, "tsk_order", "must be 0 or 1");
  check(c.hidden_units > 0, "hidden_units", "must be positive");
  check(c.num_features > 0, "num_features", "must be positive");
  check(c.num_rules > 0, "num_rules", "must be positive");
}

double clip_surrogate(double ratio, double advantage, double eps) {
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  return std::min(ratio * advantage, clipped * advantage);
}

UpdateMetrics ppo_loss(ActorCritic& agent, const RolloutBuffer& buf,
                       std::span<const std::size_t> indices, const TrainConfig& config,
                       bool accumulate_grads) {
  require(!indices.empty(), "ppo_loss: empty minibatch");
  require(buf.advantages.size() == buf.size() && buf.returns.size() == buf.size(),
          "ppo_loss: buffer has no returns/advantages");
  const std::size_t batch = indices.size();
  Matrix states(batch, 4);
  std::vector<int> actions(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    const auto s = buf.states.at(indices[i]).as_array();
    std::copy(s.begin(), s.end(), states.row(i).begin());
    actions[i] = buf.actions[indices[i]];
  }

  auto run = [&](Tape& tape) -> UpdateMetrics {
    const Var x = tape.constant(std::move(states));
    const PolicyVars pv = policy_graph(tape, agent.policy, x);
    const Var v = value_graph(tape, agent.critic, x);
    const Matrix& lp = tape.value(pv.log_probs);
    const Matrix& ent = tape.value(pv.entropy);
    const Matrix& val = tape.value(v);

    const double inv_b = 1.0 / static_cast<double>(batch);
    UpdateMetrics m;
    Matrix seed_lp(batch, lp.cols());
    Matrix seed_h(batch, 1);
    Matrix seed_v(batch, 1);
    double surrogate = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
      const std::size_t t = indices[i];
      const auto a = static_cast<std::size_t>(actions[i]);
      const double log_ratio = lp(i, a) - buf.log_probs_old[t];
      const double ratio = std::exp(log_ratio);
      const double adv = buf.advantages[t];
      surrogate += clip_surrogate(ratio, adv, config.clip_eps);

      // The min selects the unclipped term (gradient A r dlogp) unless the
      // clipped one is strictly smaller, where the gradient vanishes.
      const double clipped = std::clamp(ratio, 1.0 - config.clip_eps, 1.0 + config.clip_eps);
      const bool unclipped_active = ratio * adv <= clipped * adv;
      seed_lp(i, a) = unclipped_active ? -inv_b * adv * ratio : 0.0;

      const double err = val(i, 0) - buf.returns[t];
      m.loss_value += 0.5 * err * err * inv_b;
      seed_v(i, 0) = config.value_coef * err * inv_b;

      m.entropy += ent(i, 0) * inv_b;
      seed_h(i, 0) = -config.entropy_coef * inv_b;

      m.approx_kl += -log_ratio * inv_b;
      m.mean_abs_ratio_deviation += std::abs(ratio - 1.0) * inv_b;
      if (std::abs(ratio - 1.0) > config.clip_eps) m.clip_fraction += inv_b;
    }
    m.loss_clip = -surrogate * inv_b;
    m.loss_total = m.loss_clip + config.value_coef * m.loss_value - config.entropy_coef * m.entropy;
    if (!std::isfinite(m.loss_total)) {
      throw NumericError("non-finite PPO loss (clip " + std::to_string(m.loss_clip) + ", value " +
                         std::to_string(m.loss_value) + ", entropy " +
                         std::to_string(m.entropy) + ")");
    }
    if (accumulate_grads) {
      tape.backward({{pv.log_probs, &seed_lp}, {pv.entropy, &seed_h}, {v, &seed_v}});
    }
    return m;
  };

  if (accumulate_grads) {
    Tape tape(agent.store);
    return run(tape);
  }
  Tape tape(std::as_const(agent.store));
  return run(tape);
}

UpdateMetrics ppo_minibatch_update(ActorCritic& agent, const RolloutBuffer& buf,
                                   std::span<const std::size_t> indices,
                                   const TrainConfig& config) {
  agent.store.zero_grads();
  UpdateMetrics m = ppo_loss(agent, buf, indices, config, true);
  AdamConfig adam;
  adam.lr = config.lr;
  adam.grad_clip = config.grad_clip;
  m.grad_norm_preclip = adam_step(agent.store, adam);
  clamp_sigmas(agent.store, agent.policy);
  return m;
}

}  // namespace fuzzyppo
