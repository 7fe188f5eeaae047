#pragma once

#include <array>
#include <concepts>
#include <cstdint>

#include "fuzzyppo/error.hpp"

namespace fuzzyppo {

// Cart-pole observation.
struct State {
  double x = 0.0;          // cart position (m)
  double x_dot = 0.0;      // cart velocity (m/s)
  double theta = 0.0;      // pole angle (rad)
  double theta_dot = 0.0;  // pole angular velocity (rad/s)

  std::array<double, 4> as_array() const { return {x, x_dot, theta, theta_dot}; }
  bool operator==(const State&) const = default;
};

inline State operator-(const State& s) { return {-s.x, -s.x_dot, -s.theta, -s.theta_dot}; }

struct StepOutcome {
  State next_state;
  double reward = 1.0;
  bool terminated = false;  // a failure threshold was crossed
  bool truncated = false;   // the step cap was reached
  bool done() const { return terminated || truncated; }
};

// The published CartPole-v1 constants.
struct EnvParams {
  double gravity = 9.8;
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double pole_half_length = 0.5;
  double force_mag = 10.0;
  double tau = 0.02;
  double x_threshold = 2.4;
  double theta_threshold = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
  int max_episode_steps = 500;
};

// Source of uniform [0, 1) draws. `Rng` satisfies it, as does any
// callable returning double (handy for pinning draws in tests).
template <class U>
concept UniformSource = requires(U& u) {
  { u.uniform() } -> std::convertible_to<double>;
} || requires(U& u) {
  { u() } -> std::convertible_to<double>;
};

class CartPole {
 public:
  static constexpr int kActions = 2;
  static constexpr int kObservationSize = 4;

  explicit CartPole(EnvParams params = {}) : params_(params) {}

  // Draws every component uniformly on [-0.05, 0.05].
  template <UniformSource U>
  State reset(U& source) {
    auto draw = [&]() -> double {
      if constexpr (requires { source.uniform(); }) {
        return source.uniform();
      } else {
        return source();
      }
    };
    State s;
    s.x = -0.05 + 0.1 * draw();
    s.x_dot = -0.05 + 0.1 * draw();
    s.theta = -0.05 + 0.1 * draw();
    s.theta_dot = -0.05 + 0.1 * draw();
    return start(s);
  }

  // Starts an episode from an explicit state (tests, mirrored rollouts).
  State start(const State& s);

  // Advances the current episode by one Euler step. Throws
  // ContractViolation if the episode has ended or was never started.
  StepOutcome step(int action);

  // Pure dynamics: one Euler step of `s` under `action`, no episode bookkeeping.
  State dynamics(const State& s, int action) const;
  bool out_of_bounds(const State& s) const;

  const State& state() const { return state_; }
  int steps() const { return steps_; }
  bool active() const { return active_; }
  const EnvParams& params() const { return params_; }

 private:
  EnvParams params_;
  State state_{};
  int steps_ = 0;
  bool active_ = false;
};

}  // namespace fuzzyppo
