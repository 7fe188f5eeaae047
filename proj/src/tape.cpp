#include "fuzzyppo/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fuzzyppo/error.hpp"
#include "fuzzyppo/kernels.hpp"

namespace fuzzyppo {

Tape::Tape(ParamStore& store) : values_(&store), grads_(&store) {}
Tape::Tape(const ParamStore& store) : values_(&store), grads_(nullptr) {}

Var Tape::push(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), false, nullptr});
  return Var{nodes_.size() - 1};
}

Matrix& Tape::grad_accumulator(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  n.has_grad = true;
  return n.grad;
}

Var Tape::constant(Matrix value) { return push(std::move(value)); }

Var Tape::affine(Var x, ParamId weight, ParamId bias) {
  const Matrix& in = value(x);
  const ParamEntry& w = param(weight);
  const ParamEntry& b = param(bias);
  require(w.shape.size() == 2 && w.shape[1] == in.cols(),
          "Tape::affine: weight '" + w.name + "' does not match input width");
  require(b.size() == w.shape[0], "Tape::affine: bias '" + b.name + "' does not match weight rows");
  const kernels::AffineShape s{in.rows(), w.shape[1], w.shape[0]};

  Matrix out(s.batch, s.out);
  kernels::affine_forward(s, in.flat(), w.value, b.value, out.flat());
  const Var y = push(std::move(out));
  if (recording()) {
    nodes_[y.id].backward = [this, x, y, weight, bias, s] {
      std::span<double> dx;
      if (!nodes_[x.id].value.empty()) dx = grad_accumulator(x.id).flat();
      kernels::affine_backward(s, nodes_[x.id].value.flat(), param(weight).value,
                               nodes_[y.id].grad.flat(), dx, param_grad(weight),
                               param_grad(bias));
    };
  }
  return y;
}

Var Tape::relu(Var x) {
  Matrix out = value(x);
  for (double& v : out.flat()) v = v > 0.0 ? v : 0.0;
  const Var y = push(std::move(out));
  if (recording()) {
    nodes_[y.id].backward = [this, x, y] {
      auto dx = grad_accumulator(x.id).flat();
      auto in = nodes_[x.id].value.flat();
      auto dy = nodes_[y.id].grad.flat();
      for (std::size_t i = 0; i < dx.size(); ++i) {
        if (in[i] > 0.0) dx[i] += dy[i];
      }
    };
  }
  return y;
}

Var Tape::tanh(Var x) {
  Matrix out = value(x);
  for (double& v : out.flat()) v = std::tanh(v);
  const Var y = push(std::move(out));
  if (recording()) {
    nodes_[y.id].backward = [this, x, y] {
      auto dx = grad_accumulator(x.id).flat();
      auto t = nodes_[y.id].value.flat();
      auto dy = nodes_[y.id].grad.flat();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * (1.0 - t[i] * t[i]);
    };
  }
  return y;
}

Var Tape::gaussian_mf(Var features, ParamId centers, ParamId sigmas) {
  const Matrix& f = value(features);
  const ParamEntry& c = param(centers);
  const ParamEntry& sg = param(sigmas);
  require(c.shape.size() == 2 && c.shape[1] == f.cols(),
          "Tape::gaussian_mf: centers do not match feature width");
  require(sg.shape == c.shape, "Tape::gaussian_mf: sigmas and centers differ in shape");
  for (double v : sg.value) {
    require(v > 0.0, "Tape::gaussian_mf: sigma in '" + sg.name + "' must be strictly positive");
  }
  const kernels::MembershipShape s{f.rows(), c.shape[0], c.shape[1]};

  Matrix firing(s.batch, s.rules);
  kernels::gaussian_mf_forward(s, f.flat(), c.value, sg.value, firing.flat());
  const Var y = push(std::move(firing));
  if (recording()) {
    nodes_[y.id].backward = [this, features, y, centers, sigmas, s] {
      kernels::gaussian_mf_backward(s, nodes_[features.id].value.flat(), param(centers).value,
                                    param(sigmas).value, nodes_[y.id].value.flat(),
                                    nodes_[y.id].grad.flat(),
                                    grad_accumulator(features.id).flat(), param_grad(centers),
                                    param_grad(sigmas));
    };
  }
  return y;
}

Var Tape::normalize_rows(Var weights) {
  const Matrix& in = value(weights);
  Matrix out(in.rows(), in.cols());
  std::vector<double> sums(in.rows(), 0.0);
  std::vector<char> fallback(in.rows(), 0);
  for (std::size_t b = 0; b < in.rows(); ++b) {
    auto row = in.row(b);
    const bool underflow =
        std::all_of(row.begin(), row.end(), [](double v) { return v < kUnderflow; });
    if (underflow) {
      fallback[b] = 1;
      for (double& v : out.row(b)) v = 1.0 / static_cast<double>(in.cols());
      continue;
    }
    double sum = 0.0;
    for (double v : row) sum += v;
    sums[b] = sum;
    for (std::size_t r = 0; r < in.cols(); ++r) out(b, r) = row[r] / sum;
  }
  const Var y = push(std::move(out));
  if (recording()) {
    nodes_[y.id].backward = [this, weights, y, sums = std::move(sums),
                             fallback = std::move(fallback)] {
      Matrix& dx = grad_accumulator(weights.id);
      const Matrix& p = nodes_[y.id].value;
      const Matrix& dy = nodes_[y.id].grad;
      for (std::size_t b = 0; b < p.rows(); ++b) {
        if (fallback[b]) continue;
        // d(s_r / S)/d s_k = (delta_rk - p_r) / S
        double inner = 0.0;
        for (std::size_t r = 0; r < p.cols(); ++r) inner += dy(b, r) * p(b, r);
        for (std::size_t k = 0; k < p.cols(); ++k) dx(b, k) += (dy(b, k) - inner) / sums[b];
      }
    };
  }
  return y;
}

Var Tape::tsk_mixture(Var weights, Var inputs, std::optional<ParamId> consequents, ParamId bias,
                      std::size_t actions) {
  const Matrix& w = value(weights);
  const Matrix& x = value(inputs);
  require(w.rows() == x.rows(), "Tape::tsk_mixture: batch sizes differ");
  const std::size_t dims = consequents ? x.cols() : 0;
  const kernels::MixtureShape s{w.rows(), w.cols(), actions, dims};
  const ParamEntry& b = param(bias);
  require(b.size() == s.rules * s.actions, "Tape::tsk_mixture: bias shape mismatch");
  std::span<const double> a;
  if (consequents) {
    const ParamEntry& ce = param(*consequents);
    require(ce.size() == s.rules * s.actions * s.dims,
            "Tape::tsk_mixture: consequent shape mismatch");
    a = ce.value;
  }

  Matrix rule_out(s.batch, s.rules * s.actions);
  Matrix logits(s.batch, s.actions);
  kernels::tsk_forward(s, w.flat(), x.flat(), a, b.value, rule_out.flat(), logits.flat());
  const Var y = push(std::move(logits));
  if (recording()) {
    nodes_[y.id].backward = [this, weights, inputs, consequents, bias, y, s,
                             rule_out = std::move(rule_out)] {
      std::span<const double> a;
      std::span<double> da;
      std::span<double> dx;
      if (consequents) {
        a = param(*consequents).value;
        da = param_grad(*consequents);
        dx = grad_accumulator(inputs.id).flat();
      }
      kernels::tsk_backward(s, nodes_[weights.id].value.flat(), nodes_[inputs.id].value.flat(), a,
                            rule_out.flat(), nodes_[y.id].grad.flat(),
                            grad_accumulator(weights.id).flat(), dx, da, param_grad(bias));
    };
  }
  return y;
}

Var Tape::log_softmax(Var logits) {
  const Matrix& z = value(logits);
  Matrix out(z.rows(), z.cols());
  for (std::size_t b = 0; b < z.rows(); ++b) {
    auto row = z.row(b);
    const double m = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - m);
    const double log_sum = m + std::log(sum);
    for (std::size_t a = 0; a < z.cols(); ++a) out(b, a) = row[a] - log_sum;
  }
  const Var y = push(std::move(out));
  if (recording()) {
    nodes_[y.id].backward = [this, logits, y] {
      Matrix& dz = grad_accumulator(logits.id);
      const Matrix& lp = nodes_[y.id].value;
      const Matrix& dy = nodes_[y.id].grad;
      for (std::size_t b = 0; b < lp.rows(); ++b) {
        double total = 0.0;
        for (std::size_t a = 0; a < lp.cols(); ++a) total += dy(b, a);
        for (std::size_t a = 0; a < lp.cols(); ++a) {
          dz(b, a) += dy(b, a) - std::exp(lp(b, a)) * total;
        }
      }
    };
  }
  return y;
}

Var Tape::entropy(Var log_probs) {
  const Matrix& lp = value(log_probs);
  Matrix out(lp.rows(), 1);
  for (std::size_t b = 0; b < lp.rows(); ++b) {
    double h = 0.0;
    for (double v : lp.row(b)) h -= std::exp(v) * v;
    out(b, 0) = h;
  }
  const Var y = push(std::move(out));
  if (recording()) {
    nodes_[y.id].backward = [this, log_probs, y] {
      Matrix& dlp = grad_accumulator(log_probs.id);
      const Matrix& lp = nodes_[log_probs.id].value;
      const Matrix& dy = nodes_[y.id].grad;
      for (std::size_t b = 0; b < lp.rows(); ++b) {
        for (std::size_t a = 0; a < lp.cols(); ++a) {
          dlp(b, a) -= dy(b, 0) * std::exp(lp(b, a)) * (lp(b, a) + 1.0);
        }
      }
    };
  }
  return y;
}

void Tape::backward(std::initializer_list<std::pair<Var, const Matrix*>> seeds) {
  backward(std::vector<std::pair<Var, const Matrix*>>(seeds));
}

void Tape::backward(const std::vector<std::pair<Var, const Matrix*>>& seeds) {
  require(recording(), "Tape::backward on a forward-only tape");
  for (auto& n : nodes_) {
    if (n.has_grad) n.grad.fill(0.0);
    n.has_grad = false;
  }
  for (const auto& [v, seed] : seeds) {
    Matrix& g = grad_accumulator(v.id);
    require(seed->rows() == g.rows() && seed->cols() == g.cols(),
            "Tape::backward: seed shape does not match node");
    for (std::size_t i = 0; i < g.size(); ++i) g.flat()[i] += seed->flat()[i];
  }
  for (std::size_t id = nodes_.size(); id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.has_grad || !n.backward) continue;
    for (double g : n.grad.flat()) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient reaching tape node " + std::to_string(id));
      }
    }
    n.backward();
  }
}

}  // namespace fuzzyppo
