#include "fuzzyppo/rollout.hpp"

#include <cmath>

#include "fuzzyppo/error.hpp"

namespace fuzzyppo {

void RolloutBuffer::clear() { *this = RolloutBuffer{}; }

void generalized_advantages(std::span<const double> rewards, std::span<const double> values,
                            std::span<const std::uint8_t> terminated,
                            std::span<const std::uint8_t> truncated,
                            std::span<const double> truncation_values, double bootstrap_value,
                            double gamma, double lambda, std::span<double> advantages) {
  const std::size_t n = rewards.size();
  require(values.size() == n && terminated.size() == n && truncated.size() == n &&
              truncation_values.size() == n && advantages.size() == n,
          "generalized_advantages: length mismatch");
  double next_advantage = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    double next_value = 0.0;
    if (terminated[t]) {
      next_value = 0.0;
    } else if (truncated[t]) {
      next_value = truncation_values[t];
    } else {
      next_value = t + 1 < n ? values[t + 1] : bootstrap_value;
    }
    const double delta = rewards[t] + gamma * next_value - values[t];
    const bool done = terminated[t] || truncated[t];
    const double a = delta + (done ? 0.0 : gamma * lambda * next_advantage);
    advantages[t] = a;
    next_advantage = a;
  }
}

void compute_returns_advantages(RolloutBuffer& buf, double gamma, double lambda) {
  buf.advantages.assign(buf.size(), 0.0);
  generalized_advantages(buf.rewards, buf.values, buf.terminated, buf.truncated,
                         buf.truncation_values, buf.bootstrap_value, gamma, lambda,
                         buf.advantages);
  buf.returns.resize(buf.size());
  for (std::size_t t = 0; t < buf.size(); ++t) buf.returns[t] = buf.advantages[t] + buf.values[t];
}

void normalize_advantages(std::span<double> advantages) {
  if (advantages.empty()) return;
  const double n = static_cast<double>(advantages.size());
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= n;
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  const double stddev = std::sqrt(var / n);
  for (double& a : advantages) {
    a -= mean;
    if (stddev > 0.0) a /= stddev;
  }
}

}  // namespace fuzzyppo
