#pragma once

#include <limits>

#include "fuzzyppo/param_store.hpp"

namespace fuzzyppo {

struct AdamConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Joint L2 bound over every gradient in the store.
  double grad_clip = std::numeric_limits<double>::infinity();
};

// L2 norm of all gradients in the store, taken jointly.
double global_grad_norm(const ParamStore& store);

// Clips the joint gradient norm to config.grad_clip (only if exceeded), then
// applies one bias-corrected Adam update to every entry and bumps
// store.step_count. Returns the pre-clip norm. Throws NumericError naming
// the first entry with a non-finite gradient; the store is left untouched.
double adam_step(ParamStore& store, const AdamConfig& config);

}  // namespace fuzzyppo
