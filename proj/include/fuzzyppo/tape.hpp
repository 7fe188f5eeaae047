#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <utility>
#include <vector>

#include "fuzzyppo/matrix.hpp"
#include "fuzzyppo/param_store.hpp"

namespace fuzzyppo {

struct Var {
  std::size_t id = 0;
};

// Reverse-mode record of one batched forward pass. Every node is a
// [batch x width] matrix. Parameters live in a ParamStore; backward adds
// into their grad arrays, so gradients from several passes accumulate
// until ParamStore::zero_grads().
//
// A tape built over a const store is forward-only.
class Tape {
 public:
  explicit Tape(ParamStore& store);
  explicit Tape(const ParamStore& store);

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return grads_ != nullptr; }

  Var constant(Matrix value);

  // x [B x in], weight [out x in], bias [out] -> [B x out]
  Var affine(Var x, ParamId weight, ParamId bias);
  Var relu(Var x);
  Var tanh(Var x);

  // features [B x d], centers/sigmas [R x d] -> firing strengths [B x R].
  // Throws ContractViolation on a non-positive sigma.
  Var gaussian_mf(Var features, ParamId centers, ParamId sigmas);

  // Divides each row by its sum. A row whose entries are all below
  // kUnderflow becomes uniform and passes no gradient back.
  static constexpr double kUnderflow = 1e-300;
  Var normalize_rows(Var weights);

  // weights [B x R], inputs [B x d] -> logits [B x actions].
  // consequents [R x actions x d] (absent for zeroth-order rules), bias [R x actions].
  Var tsk_mixture(Var weights, Var inputs, std::optional<ParamId> consequents, ParamId bias,
                  std::size_t actions);

  // Row-wise log-softmax, shifted by the row max.
  Var log_softmax(Var logits);
  // -sum_a exp(lp_a) lp_a per row of log-probabilities -> [B x 1].
  Var entropy(Var log_probs);

  const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
  // Gradient left on a node by the last backward(); empty if none reached it.
  const Matrix& grad(Var v) const { return nodes_.at(v.id).grad; }

  // Clears all node gradients, seeds the given nodes and propagates back to
  // the parameters. May be called repeatedly; parameter gradients add up.
  void backward(std::initializer_list<std::pair<Var, const Matrix*>> seeds);
  void backward(const std::vector<std::pair<Var, const Matrix*>>& seeds);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool has_grad = false;
    std::function<void()> backward;
  };

  Var push(Matrix value);
  Matrix& grad_accumulator(std::size_t id);
  const ParamEntry& param(ParamId id) const { return (*values_)[id]; }
  std::vector<double>& param_grad(ParamId id) { return (*grads_)[id].grad; }

  const ParamStore* values_;
  ParamStore* grads_;
  std::vector<Node> nodes_;
};

}  // namespace fuzzyppo
