#include "fuzzyppo/kernels.hpp"

#include <omp.h>

#include <atomic>

namespace fuzzyppo::kernels {
namespace {

std::atomic<Execution> g_execution{Execution::kAuto};

// Below this many multiply-adds per call a parallel region costs more than it saves.
constexpr std::size_t kParallelThreshold = 1 << 16;

bool use_parallel(std::size_t work) {
  switch (g_execution.load(std::memory_order_relaxed)) {
    case Execution::kSerial:
      return false;
    case Execution::kParallel:
      return true;
    case Execution::kAuto:
      break;
  }
  return work >= kParallelThreshold && omp_get_max_threads() > 1 && !omp_in_parallel();
}

}  // namespace

void set_execution(Execution e) { g_execution.store(e, std::memory_order_relaxed); }
Execution execution() { return g_execution.load(std::memory_order_relaxed); }

void affine_forward(AffineShape s, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y) {
  if (use_parallel(s.batch * s.in * s.out)) return omp::affine_forward(s, x, w, bias, y);
  serial::affine_forward(s, x, w, bias, y);
}

void affine_backward(AffineShape s, std::span<const double> x, std::span<const double> w,
                     std::span<const double> dy, std::span<double> dx, std::span<double> dw,
                     std::span<double> dbias) {
  if (use_parallel(s.batch * s.in * s.out)) {
    return omp::affine_backward(s, x, w, dy, dx, dw, dbias);
  }
  serial::affine_backward(s, x, w, dy, dx, dw, dbias);
}

void gaussian_mf_forward(MembershipShape s, std::span<const double> features,
                         std::span<const double> centers, std::span<const double> sigmas,
                         std::span<double> firing) {
  if (use_parallel(s.batch * s.rules * s.dims)) {
    return omp::gaussian_mf_forward(s, features, centers, sigmas, firing);
  }
  serial::gaussian_mf_forward(s, features, centers, sigmas, firing);
}

void gaussian_mf_backward(MembershipShape s, std::span<const double> features,
                          std::span<const double> centers, std::span<const double> sigmas,
                          std::span<const double> firing, std::span<const double> dfiring,
                          std::span<double> dfeatures, std::span<double> dcenters,
                          std::span<double> dsigmas) {
  if (use_parallel(s.batch * s.rules * s.dims)) {
    return omp::gaussian_mf_backward(s, features, centers, sigmas, firing, dfiring, dfeatures,
                                     dcenters, dsigmas);
  }
  serial::gaussian_mf_backward(s, features, centers, sigmas, firing, dfiring, dfeatures, dcenters,
                               dsigmas);
}

void tsk_forward(MixtureShape s, std::span<const double> weights, std::span<const double> inputs,
                 std::span<const double> consequents, std::span<const double> bias,
                 std::span<double> rule_out, std::span<double> logits) {
  if (use_parallel(s.batch * s.rules * s.actions * (s.dims + 1))) {
    return omp::tsk_forward(s, weights, inputs, consequents, bias, rule_out, logits);
  }
  serial::tsk_forward(s, weights, inputs, consequents, bias, rule_out, logits);
}

void tsk_backward(MixtureShape s, std::span<const double> weights, std::span<const double> inputs,
                  std::span<const double> consequents, std::span<const double> rule_out,
                  std::span<const double> dlogits, std::span<double> dweights,
                  std::span<double> dinputs, std::span<double> dconsequents,
                  std::span<double> dbias) {
  if (use_parallel(s.batch * s.rules * s.actions * (s.dims + 1))) {
    return omp::tsk_backward(s, weights, inputs, consequents, rule_out, dlogits, dweights, dinputs,
                             dconsequents, dbias);
  }
  serial::tsk_backward(s, weights, inputs, consequents, rule_out, dlogits, dweights, dinputs,
                       dconsequents, dbias);
}

}  // namespace fuzzyppo::kernels
