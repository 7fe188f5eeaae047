#pragma once

// Batched forward/backward kernels for the heavy layers of the actor and critic.
//
// Every kernel has a serial reference in `kernels::serial` and an OpenMP
// version in `kernels::omp`. The OpenMP versions split work only along
// output elements and keep each element's summation order identical to the
// serial loop, so both produce bitwise-identical results for any thread
// count. Backward kernels accumulate (+=) into their gradient outputs.

#include <cstddef>
#include <span>

namespace fuzzyppo::kernels {

struct AffineShape {
  std::size_t batch;
  std::size_t in;
  std::size_t out;
};

struct MembershipShape {
  std::size_t batch;
  std::size_t rules;
  std::size_t dims;
};

// `actions` consequents per rule, each affine in `dims` inputs (dims == 0
// for zeroth-order rules, which then carry only the bias term).
struct MixtureShape {
  std::size_t batch;
  std::size_t rules;
  std::size_t actions;
  std::size_t dims;
};

#define FUZZYPPO_KERNEL_DECLS                                                              \
  /* y[b,o] = sum_i w[o,i] x[b,i] + bias[o] */                                             \
  void affine_forward(AffineShape s, std::span<const double> x, std::span<const double> w, \
                      std::span<const double> bias, std::span<double> y);                  \
  /* dx may be empty when the input needs no gradient. */                                  \
  void affine_backward(AffineShape s, std::span<const double> x, std::span<const double> w, \
                       std::span<const double> dy, std::span<double> dx,                   \
                       std::span<double> dw, std::span<double> dbias);                     \
  /* firing[b,r] = exp(-sum_d (f[b,d]-c[r,d])^2 / (2 sigma[r,d]^2)) */                     \
  void gaussian_mf_forward(MembershipShape s, std::span<const double> features,             \
                           std::span<const double> centers, std::span<const double> sigmas, \
                           std::span<double> firing);                                      \
  void gaussian_mf_backward(MembershipShape s, std::span<const double> features,            \
                            std::span<const double> centers,                               \
                            std::span<const double> sigmas, std::span<const double> firing, \
                            std::span<const double> dfiring, std::span<double> dfeatures,  \
                            std::span<double> dcenters, std::span<double> dsigmas);        \
  /* rule_out[b,r,a] = sum_d A[r,a,d] x[b,d] + bias[r,a];                                  \
     logits[b,a] = sum_r weights[b,r] rule_out[b,r,a] */                                   \
  void tsk_forward(MixtureShape s, std::span<const double> weights,                        \
                   std::span<const double> inputs, std::span<const double> consequents,    \
                   std::span<const double> bias, std::span<double> rule_out,               \
                   std::span<double> logits);                                              \
  void tsk_backward(MixtureShape s, std::span<const double> weights,                       \
                    std::span<const double> inputs, std::span<const double> consequents,   \
                    std::span<const double> rule_out, std::span<const double> dlogits,     \
                    std::span<double> dweights, std::span<double> dinputs,                 \
                    std::span<double> dconsequents, std::span<double> dbias);

namespace serial {
FUZZYPPO_KERNEL_DECLS
}  // namespace serial

namespace omp {
FUZZYPPO_KERNEL_DECLS
}  // namespace omp

enum class Execution { kSerial, kParallel, kAuto };

// Process-wide choice used by the dispatching entry points below. kAuto runs
// the OpenMP kernels only when more than one thread is available and the
// batch is large enough to amortize the fork.
void set_execution(Execution e);
Execution execution();

FUZZYPPO_KERNEL_DECLS

#undef FUZZYPPO_KERNEL_DECLS

}  // namespace fuzzyppo::kernels
