#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fuzzyppo/cartpole.hpp"
#include "fuzzyppo/param_store.hpp"
#include "fuzzyppo/tape.hpp"

namespace fuzzyppo {

class Rng;

// What the first-order rule consequents are affine in.
enum class ConsequentInput { kFeatures, kState };

std::string to_string(ConsequentInput c);
ConsequentInput parse_consequent_input(const std::string& s);

struct PolicyConfig {
  std::size_t inputs = 4;
  std::size_t hidden = 128;
  std::size_t features = 127;
  std::size_t rules = 16;
  std::size_t actions = 2;
  int tsk_order = 1;  // 0: constant consequents, 1: affine consequents
  ConsequentInput consequent_input = ConsequentInput::kFeatures;
  double sigma_floor = 1e-3;
};

struct CriticConfig {
  std::size_t inputs = 4;
  std::size_t hidden1 = 64;
  std::size_t hidden2 = 32;
};

// ANFIS actor: state -> ReLU feature net -> Gaussian rule firing ->
// normalized TSK mixture -> action logits. Holds handles into a ParamStore.
struct AnfisPolicy {
  PolicyConfig config;
  ParamId w1, b1;          // [hidden x inputs], [hidden]
  ParamId w2, b2;          // [features x hidden], [features]
  ParamId centers;         // [rules x features]
  ParamId sigmas;          // [rules x features]
  std::optional<ParamId> consequent_weights;  // [rules x actions x consequent dims]
  ParamId consequent_bias;                    // [rules x actions]
};

// Critic: V3 tanh(V2 tanh(V1 s + c1) + c2) + c3.
struct ValueNet {
  CriticConfig config;
  ParamId v1, c1, v2, c2, v3, c3;
};

// Registers all actor tensors (names prefixed "actor.") with zero values.
AnfisPolicy add_policy(ParamStore& store, const PolicyConfig& config);
// Registers all critic tensors (names prefixed "critic.").
ValueNet add_value_net(ParamStore& store, const CriticConfig& config);

// Centers ~ N(0, 0.1^2), sigmas = 0.25 + 0.5 U(0,1), consequent weights and
// biases ~ 2 N(0,1); feature-net weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
// zero biases.
void init_policy(ParamStore& store, const AnfisPolicy& policy, Rng& rng);
// Same fan-in uniform scheme with zero biases.
void init_value_net(ParamStore& store, const ValueNet& net, Rng& rng);

// Keeps every sigma at or above config.sigma_floor.
void clamp_sigmas(ParamStore& store, const AnfisPolicy& policy);

// Actor and critic sharing one store, as optimized jointly.
struct ActorCritic {
  ParamStore store;
  AnfisPolicy policy;
  ValueNet critic;
};

ActorCritic make_actor_critic(const PolicyConfig& policy, const CriticConfig& critic);
ActorCritic make_actor_critic(const PolicyConfig& policy, const CriticConfig& critic, Rng& rng);

// Graph handles produced by a batched actor forward pass.
struct PolicyVars {
  Var features;
  Var firing;
  Var firing_normalized;
  Var logits;
  Var log_probs;
  Var entropy;
};

// states: [B x 4] tape node.
PolicyVars policy_graph(Tape& tape, const AnfisPolicy& policy, Var states);
// Returns the [B x 1] value node.
Var value_graph(Tape& tape, const ValueNet& net, Var states);

Matrix states_to_matrix(std::span<const State> states);

struct PolicyOutput {
  std::vector<double> logits;
  std::vector<double> probs;
  std::vector<double> log_probs;
  double entropy = 0.0;
  std::vector<double> firing_normalized;
};

PolicyOutput policy_forward(const ParamStore& store, const AnfisPolicy& policy, const State& s);
double value_forward(const ParamStore& store, const ValueNet& net, const State& s);

struct ActionSample {
  int action = 0;
  double log_prob = 0.0;
};

ActionSample sample_action(const PolicyOutput& out, Rng& rng);

// Argmax over logits; ties go to the lowest action index.
int deterministic_action(const PolicyOutput& out);

// Back-propagates upstream gradients on the chosen-action log-probability
// and on the entropy (one value per batch row) into the store's grads.
void policy_backward(Tape& tape, const PolicyVars& vars, std::span<const int> actions,
                     std::span<const double> dlog_prob, std::span<const double> dentropy);

}  // namespace fuzzyppo
