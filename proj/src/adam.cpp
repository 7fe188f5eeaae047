#include "fuzzyppo/adam.hpp"

#include <cmath>

#include "fuzzyppo/error.hpp"

namespace fuzzyppo {

double global_grad_norm(const ParamStore& store) {
  double sq = 0.0;
  for (const auto& e : store.entries()) {
    for (double g : e.grad) sq += g * g;
  }
  return std::sqrt(sq);
}

double adam_step(ParamStore& store, const AdamConfig& config) {
  for (const auto& e : store.entries()) {
    for (std::size_t i = 0; i < e.grad.size(); ++i) {
      if (!std::isfinite(e.grad[i])) {
        throw NumericError("non-finite gradient in parameter '" + e.name + "' at index " +
                           std::to_string(i));
      }
    }
  }

  const double norm = global_grad_norm(store);
  const double scale = norm > config.grad_clip ? config.grad_clip / norm : 1.0;

  store.step_count += 1;
  const double t = static_cast<double>(store.step_count);
  const double bias1 = 1.0 - std::pow(config.beta1, t);
  const double bias2 = 1.0 - std::pow(config.beta2, t);

  for (auto& e : store.entries()) {
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      if (scale != 1.0) e.grad[i] *= scale;
      const double g = e.grad[i];
      e.adam_m[i] = config.beta1 * e.adam_m[i] + (1.0 - config.beta1) * g;
      e.adam_v[i] = config.beta2 * e.adam_v[i] + (1.0 - config.beta2) * g * g;
      const double m_hat = e.adam_m[i] / bias1;
      const double v_hat = e.adam_v[i] / bias2;
      e.value[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
  }
  return norm;
}

}  // namespace fuzzyppo
