#include "fuzzyppo/cartpole.hpp"

#include <cmath>

namespace fuzzyppo {

State CartPole::start(const State& s) {
  require(std::isfinite(s.x) && std::isfinite(s.x_dot) && std::isfinite(s.theta) &&
              std::isfinite(s.theta_dot),
          "CartPole::start: non-finite state");
  state_ = s;
  steps_ = 0;
  active_ = true;
  return state_;
}

State CartPole::dynamics(const State& s, int action) const {
  const double force = action == 1 ? params_.force_mag : -params_.force_mag;
  const double total_mass = params_.cart_mass + params_.pole_mass;
  const double polemass_length = params_.pole_mass * params_.pole_half_length;
  const double cos_t = std::cos(s.theta);
  const double sin_t = std::sin(s.theta);

  const double temp = (force + polemass_length * s.theta_dot * s.theta_dot * sin_t) / total_mass;
  const double theta_acc =
      (params_.gravity * sin_t - cos_t * temp) /
      (params_.pole_half_length *
       (4.0 / 3.0 - params_.pole_mass * cos_t * cos_t / total_mass));
  const double x_acc = temp - polemass_length * theta_acc * cos_t / total_mass;

  // Explicit Euler, old values on every right-hand side.
  State next;
  next.x = s.x + params_.tau * s.x_dot;
  next.x_dot = s.x_dot + params_.tau * x_acc;
  next.theta = s.theta + params_.tau * s.theta_dot;
  next.theta_dot = s.theta_dot + params_.tau * theta_acc;
  return next;
}

bool CartPole::out_of_bounds(const State& s) const {
  return s.x < -params_.x_threshold || s.x > params_.x_threshold ||
         s.theta < -params_.theta_threshold || s.theta > params_.theta_threshold;
}

StepOutcome CartPole::step(int action) {
  require(active_, "CartPole::step called on a finished or unstarted episode");
  require(action == 0 || action == 1, "CartPole::step: action must be 0 or 1");

  StepOutcome out;
  out.next_state = dynamics(state_, action);
  out.reward = 1.0;
  ++steps_;
  out.terminated = out_of_bounds(out.next_state);
  out.truncated = !out.terminated && steps_ >= params_.max_episode_steps;
  state_ = out.next_state;
  if (out.done()) active_ = false;
  return out;
}

}  // namespace fuzzyppo
