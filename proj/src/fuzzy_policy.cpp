#include "fuzzyppo/fuzzy_policy.hpp"

#include <algorithm>
#include <cmath>

#include "fuzzyppo/error.hpp"
#include "fuzzyppo/rng.hpp"

namespace fuzzyppo {

std::string to_string(ConsequentInput c) {
  return c == ConsequentInput::kFeatures ? "features" : "state";
}

ConsequentInput parse_consequent_input(const std::string& s) {
  if (s == "features") return ConsequentInput::kFeatures;
  if (s == "state") return ConsequentInput::kState;
  throw ContractViolation("consequent_input must be 'features' or 'state', got '" + s + "'");
}

AnfisPolicy add_policy(ParamStore& store, const PolicyConfig& config) {
  require(config.tsk_order == 0 || config.tsk_order == 1, "tsk_order must be 0 or 1");
  require(config.inputs > 0 && config.hidden > 0 && config.features > 0 && config.rules > 0 &&
              config.actions > 0,
          "policy dimensions must be positive");
  AnfisPolicy p;
  p.config = config;
  p.w1 = store.add("actor.W1", {config.hidden, config.inputs});
  p.b1 = store.add("actor.b1", {config.hidden});
  p.w2 = store.add("actor.W2", {config.features, config.hidden});
  p.b2 = store.add("actor.b2", {config.features});
  p.centers = store.add("actor.centers", {config.rules, config.features});
  p.sigmas = store.add("actor.sigmas", {config.rules, config.features});
  if (config.tsk_order == 1) {
    const std::size_t dims =
        config.consequent_input == ConsequentInput::kFeatures ? config.features : config.inputs;
    p.consequent_weights = store.add("actor.consequents", {config.rules, config.actions, dims});
  }
  p.consequent_bias = store.add("actor.consequent_bias", {config.rules, config.actions});
  return p;
}

ValueNet add_value_net(ParamStore& store, const CriticConfig& config) {
  ValueNet v;
  v.config = config;
  v.v1 = store.add("critic.V1", {config.hidden1, config.inputs});
  v.c1 = store.add("critic.c1", {config.hidden1});
  v.v2 = store.add("critic.V2", {config.hidden2, config.hidden1});
  v.c2 = store.add("critic.c2", {config.hidden2});
  v.v3 = store.add("critic.V3", {1, config.hidden2});
  v.c3 = store.add("critic.c3", {1});
  return v;
}

namespace {

void init_fan_in_uniform(ParamEntry& weight, ParamEntry& bias, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(weight.shape[1]));
  for (double& w : weight.value) w = rng.uniform(-bound, bound);
  std::fill(bias.value.begin(), bias.value.end(), 0.0);
}

}  // namespace

void init_policy(ParamStore& store, const AnfisPolicy& policy, Rng& rng) {
  init_fan_in_uniform(store[policy.w1], store[policy.b1], rng);
  init_fan_in_uniform(store[policy.w2], store[policy.b2], rng);
  for (double& c : store[policy.centers].value) c = rng.normal(0.0, 0.1);
  for (double& s : store[policy.sigmas].value) s = 0.25 + 0.5 * rng.uniform();
  if (policy.consequent_weights) {
    for (double& a : store[*policy.consequent_weights].value) a = 2.0 * rng.normal();
  }
  for (double& b : store[policy.consequent_bias].value) b = 2.0 * rng.normal();
}

void init_value_net(ParamStore& store, const ValueNet& net, Rng& rng) {
  init_fan_in_uniform(store[net.v1], store[net.c1], rng);
  init_fan_in_uniform(store[net.v2], store[net.c2], rng);
  init_fan_in_uniform(store[net.v3], store[net.c3], rng);
}

void clamp_sigmas(ParamStore& store, const AnfisPolicy& policy) {
  for (double& s : store[policy.sigmas].value) s = std::max(s, policy.config.sigma_floor);
}

ActorCritic make_actor_critic(const PolicyConfig& policy, const CriticConfig& critic) {
  ActorCritic ac;
  ac.policy = add_policy(ac.store, policy);
  ac.critic = add_value_net(ac.store, critic);
  // Sigmas must be positive even before init so a bare structure is usable.
  for (double& s : ac.store[ac.policy.sigmas].value) s = 1.0;
  return ac;
}

ActorCritic make_actor_critic(const PolicyConfig& policy, const CriticConfig& critic, Rng& rng) {
  ActorCritic ac = make_actor_critic(policy, critic);
  init_policy(ac.store, ac.policy, rng);
  init_value_net(ac.store, ac.critic, rng);
  return ac;
}

PolicyVars policy_graph(Tape& tape, const AnfisPolicy& policy, Var states) {
  PolicyVars v;
  const Var h1 = tape.relu(tape.affine(states, policy.w1, policy.b1));
  v.features = tape.relu(tape.affine(h1, policy.w2, policy.b2));
  v.firing = tape.gaussian_mf(v.features, policy.centers, policy.sigmas);
  v.firing_normalized = tape.normalize_rows(v.firing);
  const Var consequent_in =
      policy.config.consequent_input == ConsequentInput::kFeatures ? v.features : states;
  v.logits = tape.tsk_mixture(v.firing_normalized, consequent_in, policy.consequent_weights,
                              policy.consequent_bias, policy.config.actions);
  v.log_probs = tape.log_softmax(v.logits);
  v.entropy = tape.entropy(v.log_probs);
  return v;
}

Var value_graph(Tape& tape, const ValueNet& net, Var states) {
  const Var h1 = tape.tanh(tape.affine(states, net.v1, net.c1));
  const Var h2 = tape.tanh(tape.affine(h1, net.v2, net.c2));
  return tape.affine(h2, net.v3, net.c3);
}

Matrix states_to_matrix(std::span<const State> states) {
  Matrix m(states.size(), 4);
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto a = states[i].as_array();
    std::copy(a.begin(), a.end(), m.row(i).begin());
  }
  return m;
}

PolicyOutput policy_forward(const ParamStore& store, const AnfisPolicy& policy, const State& s) {
  Tape tape(store);
  const State one[1] = {s};
  const PolicyVars v = policy_graph(tape, policy, tape.constant(states_to_matrix(one)));
  PolicyOutput out;
  const auto row = [&](Var x) {
    auto r = tape.value(x).row(0);
    return std::vector<double>(r.begin(), r.end());
  };
  out.logits = row(v.logits);
  out.log_probs = row(v.log_probs);
  out.probs.resize(out.log_probs.size());
  std::transform(out.log_probs.begin(), out.log_probs.end(), out.probs.begin(),
                 [](double lp) { return std::exp(lp); });
  out.entropy = tape.value(v.entropy)(0, 0);
  out.firing_normalized = row(v.firing_normalized);
  for (double z : out.logits) {
    if (!std::isfinite(z)) throw NumericError("policy_forward: non-finite logit");
  }
  return out;
}

double value_forward(const ParamStore& store, const ValueNet& net, const State& s) {
  Tape tape(store);
  const State one[1] = {s};
  const Var v = value_graph(tape, net, tape.constant(states_to_matrix(one)));
  return tape.value(v)(0, 0);
}

ActionSample sample_action(const PolicyOutput& out, Rng& rng) {
  ActionSample a;
  a.action = rng.categorical(out.probs);
  a.log_prob = out.log_probs[static_cast<std::size_t>(a.action)];
  return a;
}

int deterministic_action(const PolicyOutput& out) {
  const auto best = std::max_element(out.logits.begin(), out.logits.end());
  return static_cast<int>(best - out.logits.begin());
}

void policy_backward(Tape& tape, const PolicyVars& vars, std::span<const int> actions,
                     std::span<const double> dlog_prob, std::span<const double> dentropy) {
  const Matrix& lp = tape.value(vars.log_probs);
  require(actions.size() == lp.rows() && dlog_prob.size() == lp.rows() &&
              dentropy.size() == lp.rows(),
          "policy_backward: upstream sizes must match the batch");
  Matrix seed_lp(lp.rows(), lp.cols());
  Matrix seed_h(lp.rows(), 1);
  for (std::size_t b = 0; b < lp.rows(); ++b) {
    require(actions[b] >= 0 && static_cast<std::size_t>(actions[b]) < lp.cols(),
            "policy_backward: action out of range");
    seed_lp(b, static_cast<std::size_t>(actions[b])) = dlog_prob[b];
    seed_h(b, 0) = dentropy[b];
  }
  tape.backward({{vars.log_probs, &seed_lp}, {vars.entropy, &seed_h}});
}

}  // namespace fuzzyppo
