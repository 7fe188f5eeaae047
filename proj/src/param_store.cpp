#include "fuzzyppo/param_store.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "fuzzyppo/error.hpp"

namespace fuzzyppo {

std::size_t shape_size(std::span<const std::size_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

ParamId ParamStore::add(std::string name, std::vector<std::size_t> shape) {
  require(!find(name).has_value(), "ParamStore::add: duplicate parameter name '" + name + "'");
  const std::size_t n = shape_size(shape);
  ParamEntry e;
  e.name = std::move(name);
  e.shape = std::move(shape);
  e.value.assign(n, 0.0);
  e.grad.assign(n, 0.0);
  e.adam_m.assign(n, 0.0);
  e.adam_v.assign(n, 0.0);
  entries_.push_back(std::move(e));
  return ParamId{entries_.size() - 1};
}

std::optional<ParamId> ParamStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return ParamId{i};
  }
  return std::nullopt;
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.size();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& e : entries_) std::fill(e.grad.begin(), e.grad.end(), 0.0);
}

}  // namespace fuzzyppo
