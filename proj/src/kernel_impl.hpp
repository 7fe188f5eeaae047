#pragma once

// Kernel bodies shared by the serial and OpenMP builds. Each kernel is
// written as independent loops over output elements; `For` decides only how
// those outer iterations are scheduled, never the order of any inner sum.

#include <cmath>
#include <cstddef>
#include <span>

#include "fuzzyppo/kernels.hpp"

namespace fuzzyppo::kernels::detail {

inline double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class For>
void affine_forward(For parallel_for, AffineShape s, std::span<const double> x,
                    std::span<const double> w, std::span<const double> bias,
                    std::span<double> y) {
  parallel_for(s.batch, [&](std::size_t b) {
    const double* xb = x.data() + b * s.in;
    double* yb = y.data() + b * s.out;
    for (std::size_t o = 0; o < s.out; ++o) {
      yb[o] = dot(w.data() + o * s.in, xb, s.in) + bias[o];
    }
  });
}

template <class For>
void affine_backward(For parallel_for, AffineShape s, std::span<const double> x,
                     std::span<const double> w, std::span<const double> dy,
                     std::span<double> dx, std::span<double> dw, std::span<double> dbias) {
  if (!dx.empty()) {
    parallel_for(s.batch, [&](std::size_t b) {
      const double* dyb = dy.data() + b * s.out;
      double* dxb = dx.data() + b * s.in;
      for (std::size_t o = 0; o < s.out; ++o) {
        if (dyb[o] != 0.0) axpy(dyb[o], w.data() + o * s.in, dxb, s.in);
      }
    });
  }
  parallel_for(s.out, [&](std::size_t o) {
    double* dwo = dw.data() + o * s.in;
    double db = 0.0;
    for (std::size_t b = 0; b < s.batch; ++b) {
      const double g = dy[b * s.out + o];
      db += g;
      if (g != 0.0) axpy(g, x.data() + b * s.in, dwo, s.in);
    }
    dbias[o] += db;
  });
}

template <class For>
void gaussian_mf_forward(For parallel_for, MembershipShape s, std::span<const double> f,
                         std::span<const double> c, std::span<const double> sigma,
                         std::span<double> firing) {
  parallel_for(s.batch, [&](std::size_t b) {
    const double* fb = f.data() + b * s.dims;
    for (std::size_t r = 0; r < s.rules; ++r) {
      const double* cr = c.data() + r * s.dims;
      const double* sr = sigma.data() + r * s.dims;
      double q = 0.0;
      for (std::size_t d = 0; d < s.dims; ++d) {
        const double z = (fb[d] - cr[d]) / sr[d];
        q += z * z;
      }
      firing[b * s.rules + r] = std::exp(-0.5 * q);
    }
  });
}

template <class For>
void gaussian_mf_backward(For parallel_for, MembershipShape s, std::span<const double> f,
                          std::span<const double> c, std::span<const double> sigma,
                          std::span<const double> firing, std::span<const double> dfiring,
                          std::span<double> df, std::span<double> dc,
                          std::span<double> dsigma) {
  // d firing / d f = -firing * (f - c) / sigma^2
  // d firing / d c = +firing * (f - c) / sigma^2
  // d firing / d sigma = firing * (f - c)^2 / sigma^3
  if (!df.empty()) {
    parallel_for(s.batch, [&](std::size_t b) {
      const double* fb = f.data() + b * s.dims;
      double* dfb = df.data() + b * s.dims;
      for (std::size_t r = 0; r < s.rules; ++r) {
        const double g = dfiring[b * s.rules + r] * firing[b * s.rules + r];
        if (g == 0.0) continue;
        const double* cr = c.data() + r * s.dims;
        const double* sr = sigma.data() + r * s.dims;
        for (std::size_t d = 0; d < s.dims; ++d) {
          dfb[d] -= g * ((fb[d] - cr[d]) / (sr[d] * sr[d]));
        }
      }
    });
  }
  parallel_for(s.rules, [&](std::size_t r) {
    const double* cr = c.data() + r * s.dims;
    const double* sr = sigma.data() + r * s.dims;
    double* dcr = dc.data() + r * s.dims;
    double* dsr = dsigma.data() + r * s.dims;
    for (std::size_t b = 0; b < s.batch; ++b) {
      const double g = dfiring[b * s.rules + r] * firing[b * s.rules + r];
      if (g == 0.0) continue;
      const double* fb = f.data() + b * s.dims;
      for (std::size_t d = 0; d < s.dims; ++d) {
        const double diff = fb[d] - cr[d];
        const double inv_s2 = 1.0 / (sr[d] * sr[d]);
        dcr[d] += g * (diff * inv_s2);
        dsr[d] += g * (diff * diff * inv_s2 / sr[d]);
      }
    }
  });
}

template <class For>
void tsk_forward(For parallel_for, MixtureShape s, std::span<const double> weights,
                 std::span<const double> inputs, std::span<const double> consequents,
                 std::span<const double> bias, std::span<double> rule_out,
                 std::span<double> logits) {
  parallel_for(s.batch, [&](std::size_t b) {
    const double* xb = inputs.data() + b * s.dims;
    const double* wb = weights.data() + b * s.rules;
    double* ob = rule_out.data() + b * s.rules * s.actions;
    for (std::size_t r = 0; r < s.rules; ++r) {
      for (std::size_t a = 0; a < s.actions; ++a) {
        const std::size_t ra = r * s.actions + a;
        double v = bias[ra];
        if (s.dims > 0) v += dot(consequents.data() + ra * s.dims, xb, s.dims);
        ob[ra] = v;
      }
    }
    for (std::size_t a = 0; a < s.actions; ++a) {
      double acc = 0.0;
      for (std::size_t r = 0; r < s.rules; ++r) acc += wb[r] * ob[r * s.actions + a];
      logits[b * s.actions + a] = acc;
    }
  });
}

template <class For>
void tsk_backward(For parallel_for, MixtureShape s, std::span<const double> weights,
                  std::span<const double> inputs, std::span<const double> consequents,
                  std::span<const double> rule_out, std::span<const double> dlogits,
                  std::span<double> dweights, std::span<double> dinputs,
                  std::span<double> dconsequents, std::span<double> dbias) {
  parallel_for(s.batch, [&](std::size_t b) {
    const double* gb = dlogits.data() + b * s.actions;
    const double* wb = weights.data() + b * s.rules;
    const double* ob = rule_out.data() + b * s.rules * s.actions;
    for (std::size_t r = 0; r < s.rules; ++r) {
      double acc = 0.0;
      for (std::size_t a = 0; a < s.actions; ++a) acc += gb[a] * ob[r * s.actions + a];
      dweights[b * s.rules + r] += acc;
    }
    if (!dinputs.empty() && s.dims > 0) {
      double* dxb = dinputs.data() + b * s.dims;
      for (std::size_t r = 0; r < s.rules; ++r) {
        for (std::size_t a = 0; a < s.actions; ++a) {
          const double g = gb[a] * wb[r];
          if (g != 0.0) axpy(g, consequents.data() + (r * s.actions + a) * s.dims, dxb, s.dims);
        }
      }
    }
  });
  parallel_for(s.rules * s.actions, [&](std::size_t ra) {
    const std::size_t r = ra / s.actions;
    const std::size_t a = ra % s.actions;
    double db = 0.0;
    for (std::size_t b = 0; b < s.batch; ++b) {
      const double g = dlogits[b * s.actions + a] * weights[b * s.rules + r];
      db += g;
      if (s.dims > 0 && g != 0.0) {
        axpy(g, inputs.data() + b * s.dims, dconsequents.data() + ra * s.dims, s.dims);
      }
    }
    dbias[ra] += db;
  });
}

}  // namespace fuzzyppo::kernels::detail
