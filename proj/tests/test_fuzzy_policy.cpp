#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fuzzyppo/fuzzy_policy.hpp"
#include "fuzzyppo/rng.hpp"
#include "gradient_harness.hpp"

using namespace fuzzyppo;

namespace {

PolicyConfig small_policy() {
  PolicyConfig pc;
  pc.hidden = 9;
  pc.features = 7;
  pc.rules = 3;
  return pc;
}

}  // namespace

TEST_CASE("parameter layout and names") {
  ActorCritic ac = make_actor_critic(PolicyConfig{}, CriticConfig{});
  const auto shape = [&](const char* name) { return ac.store[*ac.store.find(name)].shape; };
  CHECK(shape("actor.W1") == std::vector<std::size_t>{128, 4});
  CHECK(shape("actor.W2") == std::vector<std::size_t>{127, 128});
  CHECK(shape("actor.centers") == std::vector<std::size_t>{16, 127});
  CHECK(shape("actor.sigmas") == std::vector<std::size_t>{16, 127});
  CHECK(shape("actor.consequents") == std::vector<std::size_t>{16, 2, 127});
  CHECK(shape("actor.consequent_bias") == std::vector<std::size_t>{16, 2});
  CHECK(shape("critic.V1") == std::vector<std::size_t>{64, 4});
  CHECK(shape("critic.V2") == std::vector<std::size_t>{32, 64});
  CHECK(shape("critic.V3") == std::vector<std::size_t>{1, 32});

  PolicyConfig state_input;
  state_input.consequent_input = ConsequentInput::kState;
  ActorCritic s = make_actor_critic(state_input, CriticConfig{});
  CHECK(s.store[*s.store.find("actor.consequents")].shape == std::vector<std::size_t>{16, 2, 4});

  PolicyConfig zeroth;
  zeroth.tsk_order = 0;
  ActorCritic z = make_actor_critic(zeroth, CriticConfig{});
  CHECK_FALSE(z.store.find("actor.consequents").has_value());
}

TEST_CASE("initialization follows the stated distributions") {
  Rng rng(1);
  ActorCritic ac = make_actor_critic(PolicyConfig{}, CriticConfig{}, rng);
  for (double s : ac.store[ac.policy.sigmas].value) CHECK((s > 0.25 && s < 0.75));
  const double bound1 = 1.0 / std::sqrt(4.0);
  for (double w : ac.store[ac.policy.w1].value) CHECK(std::abs(w) <= bound1);
  for (double b : ac.store[ac.policy.b1].value) CHECK(b == 0.0);

  // 788 rules x 127 features = 100076 centre draws.
  PolicyConfig wide;
  wide.rules = 788;
  Rng rng2(2);
  ActorCritic big = make_actor_critic(wide, CriticConfig{}, rng2);
  const auto& centers = big.store[big.policy.centers].value;
  const double n = static_cast<double>(centers.size());
  REQUIRE(n >= 1e5);
  const double mean = std::accumulate(centers.begin(), centers.end(), 0.0) / n;
  CHECK(std::abs(mean) < 3.0 * 0.1 / std::sqrt(n));
  double var = 0.0;
  for (double c : centers) var += (c - mean) * (c - mean);
  CHECK(std::sqrt(var / n) == doctest::Approx(0.1).epsilon(0.01));

  const auto& consequents = big.store[*big.policy.consequent_weights].value;
  double sq = 0.0;
  for (double a : consequents) sq += a * a;
  CHECK(std::sqrt(sq / static_cast<double>(consequents.size())) ==
        doctest::Approx(2.0).epsilon(0.01));

  Rng a(5), b(5);
  ActorCritic x = make_actor_critic(PolicyConfig{}, CriticConfig{}, a);
  ActorCritic y = make_actor_critic(PolicyConfig{}, CriticConfig{}, b);
  for (std::size_t i = 0; i < x.store.num_entries(); ++i) {
    CHECK(x.store.entries()[i].value == y.store.entries()[i].value);
  }
}

TEST_CASE("normalized firing strengths form a convex combination") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    ActorCritic ac = harness::random_agent(PolicyConfig{}, rng);
    const PolicyOutput out = policy_forward(ac.store, ac.policy, harness::random_state(rng));
    REQUIRE(out.firing_normalized.size() == 16);
    double sum = 0.0;
    for (double w : out.firing_normalized) {
      CHECK(w >= 0.0);
      sum += w;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
    CHECK(std::abs(out.probs[0] + out.probs[1] - 1.0) < 1e-12);
    CHECK(out.logits.size() == 2);
  }
}

TEST_CASE("identical consequents make the output independent of the memberships") {
  Rng rng(4);
  ActorCritic ac = harness::random_agent(PolicyConfig{}, rng);
  auto& a = ac.store[*ac.policy.consequent_weights].value;
  auto& b = ac.store[ac.policy.consequent_bias].value;
  const std::size_t per_rule = 2 * 127;
  for (std::size_t r = 1; r < 16; ++r) {
    std::copy(a.begin(), a.begin() + per_rule, a.begin() + r * per_rule);
    b[2 * r] = b[0];
    b[2 * r + 1] = b[1];
  }
  const State s = harness::random_state(rng);

  // Expected logits A* f + b* from the feature vector.
  Tape tape(std::as_const(ac.store));
  const State one[1] = {s};
  const PolicyVars v = policy_graph(tape, ac.policy, tape.constant(states_to_matrix(one)));
  const auto f = tape.value(v.features).row(0);
  const PolicyOutput base = policy_forward(ac.store, ac.policy, s);
  for (std::size_t act = 0; act < 2; ++act) {
    double expected = b[act];
    for (std::size_t d = 0; d < 127; ++d) expected += a[act * 127 + d] * f[d];
    CHECK(std::abs(base.logits[act] - expected) < 1e-12 * std::max(1.0, std::abs(expected)));
  }

  for (double& c : ac.store[ac.policy.centers].value) c = rng.normal(0.0, 0.5);
  for (double& sg : ac.store[ac.policy.sigmas].value) sg = rng.uniform(0.1, 2.0);
  const PolicyOutput moved = policy_forward(ac.store, ac.policy, s);
  CHECK(std::abs(moved.probs[0] - base.probs[0]) < 1e-12);
  CHECK(std::abs(moved.entropy - base.entropy) < 1e-12);
}

TEST_CASE("a single rule reduces to its own consequent") {
  PolicyConfig pc;
  pc.rules = 1;
  Rng rng(6);
  ActorCritic ac = harness::random_agent(pc, rng);
  const State s = harness::random_state(rng);
  Tape tape(std::as_const(ac.store));
  const State one[1] = {s};
  const PolicyVars v = policy_graph(tape, ac.policy, tape.constant(states_to_matrix(one)));
  const auto f = tape.value(v.features).row(0);
  const auto& a = ac.store[*ac.policy.consequent_weights].value;
  const auto& b = ac.store[ac.policy.consequent_bias].value;
  CHECK(tape.value(v.firing_normalized)(0, 0) == 1.0);
  for (std::size_t act = 0; act < 2; ++act) {
    double expected = b[act];
    for (std::size_t d = 0; d < 127; ++d) expected += a[act * 127 + d] * f[d];
    CHECK(std::abs(tape.value(v.logits)(0, act) - expected) < 1e-12);
  }
}

TEST_CASE("zeroth-order and state-input consequent variants run") {
  Rng rng(7);
  PolicyConfig zeroth;
  zeroth.tsk_order = 0;
  ActorCritic z = harness::random_agent(zeroth, rng);
  const PolicyOutput out = policy_forward(z.store, z.policy, {});
  // Constant consequents: logits are a firing-weighted mix of the biases.
  const auto& b = z.store[z.policy.consequent_bias].value;
  double expected = 0.0;
  for (std::size_t r = 0; r < 16; ++r) expected += out.firing_normalized[r] * b[2 * r];
  CHECK(out.logits[0] == doctest::Approx(expected).epsilon(1e-12));

  PolicyConfig state_in;
  state_in.consequent_input = ConsequentInput::kState;
  ActorCritic s = harness::random_agent(state_in, rng);
  CHECK(std::isfinite(policy_forward(s.store, s.policy, harness::random_state(rng)).entropy));
}

TEST_CASE("deterministic action is the argmax with ties to action 0") {
  PolicyOutput out;
  out.logits = {2.0, 1.0};
  CHECK(deterministic_action(out) == 0);
  out.logits = {1.0, 2.0};
  CHECK(deterministic_action(out) == 1);
  out.logits = {0.7, 0.7};
  CHECK(deterministic_action(out) == 0);
}

TEST_CASE("shifting both logits changes neither choice nor distribution") {
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const double z0 = rng.uniform(-5, 5), z1 = rng.uniform(-5, 5), c = rng.uniform(-50, 50);
    const ParamStore empty;
    Tape tape(empty);
    const Var a = tape.log_softmax(tape.constant(Matrix(1, 2, {z0, z1})));
    const Var b = tape.log_softmax(tape.constant(Matrix(1, 2, {z0 + c, z1 + c})));
    CHECK(std::abs(std::exp(tape.value(a)(0, 0)) - std::exp(tape.value(b)(0, 0))) < 1e-12);
    CHECK(std::abs(tape.value(tape.entropy(a))(0, 0) - tape.value(tape.entropy(b))(0, 0)) <
          1e-12);
    PolicyOutput pa, pb;
    pa.logits = {z0, z1};
    pb.logits = {z0 + c, z1 + c};
    CHECK(deterministic_action(pa) == deterministic_action(pb));
  }
}

TEST_CASE("sampling follows the action probabilities") {
  Rng rng(10);
  PolicyOutput out;
  out.probs = {0.25, 0.75};
  out.log_probs = {std::log(0.25), std::log(0.75)};
  int ones = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const ActionSample a = sample_action(out, rng);
    CHECK(a.log_prob == out.log_probs[static_cast<std::size_t>(a.action)]);
    ones += a.action;
  }
  CHECK(std::abs(static_cast<double>(ones) / n - 0.75) < 0.01);

  out.probs = {1.0 - 1e-15, 1e-15};
  out.log_probs = {std::log1p(-1e-15), std::log(1e-15)};
  for (int i = 0; i < 1000; ++i) CHECK(sample_action(out, rng).action == 0);
}

TEST_CASE("value network forward") {
  ActorCritic ac = make_actor_critic(PolicyConfig{}, CriticConfig{});
  CHECK(value_forward(ac.store, ac.critic, {0.3, -1.0, 0.1, 2.0}) == 0.0);

  Rng rng(11);
  init_value_net(ac.store, ac.critic, rng);
  CHECK(value_forward(ac.store, ac.critic, {}) == 0.0);

  // Only the first unit of each layer is connected: a scalar chain.
  for (ParamId id : {ac.critic.v1, ac.critic.c1, ac.critic.v2, ac.critic.c2, ac.critic.v3,
                     ac.critic.c3}) {
    std::fill(ac.store[id].value.begin(), ac.store[id].value.end(), 0.0);
  }
  ac.store[ac.critic.v1].value[2] = 1.5;  // unit 0 reads theta
  ac.store[ac.critic.c1].value[0] = 0.1;
  ac.store[ac.critic.v2].value[0] = -2.0;
  ac.store[ac.critic.c2].value[0] = 0.3;
  ac.store[ac.critic.v3].value[0] = 4.0;
  ac.store[ac.critic.c3].value[0] = -1.0;
  const double theta = 0.17;
  const double expected = 4.0 * std::tanh(-2.0 * std::tanh(1.5 * theta + 0.1) + 0.3) - 1.0;
  CHECK(value_forward(ac.store, ac.critic, {0.0, 0.0, theta, 0.0}) ==
        doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("policy backward edge cases") {
  Rng rng(12);
  ActorCritic ac = harness::random_agent(small_policy(), rng);
  Tape tape(ac.store);
  const State one[1] = {harness::random_state(rng)};
  const PolicyVars v = policy_graph(tape, ac.policy, tape.constant(states_to_matrix(one)));
  const int actions[1] = {1};
  const double zero[1] = {0.0};
  ac.store.zero_grads();
  policy_backward(tape, v, actions, zero, zero);
  for (const auto& e : ac.store.entries()) {
    for (double g : e.grad) CHECK(g == 0.0);
  }

  Tape t2(ac.store);
  const Var logits = t2.constant(Matrix(1, 2, {0.4, 0.4}));
  const Var h = t2.entropy(t2.log_softmax(logits));
  Matrix seed(1, 1, 1.0);
  t2.backward({{h, &seed}});
  CHECK(t2.grad(logits)(0, 0) == 0.0);
  CHECK(t2.grad(logits)(0, 1) == 0.0);
}

TEST_CASE("sigma clamp keeps widths above the floor") {
  ActorCritic ac = make_actor_critic(PolicyConfig{}, CriticConfig{});
  auto& s = ac.store[ac.policy.sigmas].value;
  s[0] = -0.5;
  s[1] = 1e-6;
  s[2] = 0.3;
  clamp_sigmas(ac.store, ac.policy);
  CHECK(s[0] == 1e-3);
  CHECK(s[1] == 1e-3);
  CHECK(s[2] == 0.3);
}

TEST_CASE("full-pipeline gradients on a small architecture, every coordinate") {
  Rng rng(13);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto e = harness::check_pipeline(small_policy(), rng, {});
    worst = std::max({worst, e.log_prob, e.entropy, e.value});
    CHECK(e.total_loss < 1e-4);
  }
  CHECK(worst < 1e-5);

  PolicyConfig state_in = small_policy();
  state_in.consequent_input = ConsequentInput::kState;
  PolicyConfig zeroth = small_policy();
  zeroth.tsk_order = 0;
  for (const auto& pc : {state_in, zeroth}) {
    const auto e = harness::check_pipeline(pc, rng, {});
    CHECK(std::max({e.log_prob, e.entropy, e.value}) < 1e-5);
    CHECK(e.total_loss < 1e-4);
  }
}
