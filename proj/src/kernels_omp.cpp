#include "kernel_impl.hpp"

namespace fuzzyppo::kernels::omp {
namespace {

struct OmpFor {
  template <class F>
  void operator()(std::size_t n, F&& body) const {
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
  }
};

}  // namespace

void affine_forward(AffineShape s, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y) {
  detail::affine_forward(OmpFor{}, s, x, w, bias, y);
}

void affine_backward(AffineShape s, std::span<const double> x, std::span<const double> w,
                     std::span<const double> dy, std::span<double> dx, std::span<double> dw,
                     std::span<double> dbias) {
  detail::affine_backward(OmpFor{}, s, x, w, dy, dx, dw, dbias);
}

void gaussian_mf_forward(MembershipShape s, std::span<const double> features,
                         std::span<const double> centers, std::span<const double> sigmas,
                         std::span<double> firing) {
  detail::gaussian_mf_forward(OmpFor{}, s, features, centers, sigmas, firing);
}

void gaussian_mf_backward(MembershipShape s, std::span<const double> features,
                          std::span<const double> centers, std::span<const double> sigmas,
                          std::span<const double> firing, std::span<const double> dfiring,
                          std::span<double> dfeatures, std::span<double> dcenters,
                          std::span<double> dsigmas) {
  detail::gaussian_mf_backward(OmpFor{}, s, features, centers, sigmas, firing, dfiring,
                               dfeatures, dcenters, dsigmas);
}

void tsk_forward(MixtureShape s, std::span<const double> weights, std::span<const double> inputs,
                 std::span<const double> consequents, std::span<const double> bias,
                 std::span<double> rule_out, std::span<double> logits) {
  detail::tsk_forward(OmpFor{}, s, weights, inputs, consequents, bias, rule_out, logits);
}

void tsk_backward(MixtureShape s, std::span<const double> weights, std::span<const double> inputs,
                  std::span<const double> consequents, std::span<const double> rule_out,
                  std::span<const double> dlogits, std::span<double> dweights,
                  std::span<double> dinputs, std::span<double> dconsequents,
                  std::span<double> dbias) {
  detail::tsk_backward(OmpFor{}, s, weights, inputs, consequents, rule_out, dlogits, dweights,
                       dinputs, dconsequents, dbias);
}

}  // namespace fuzzyppo::kernels::omp
