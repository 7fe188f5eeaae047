#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fuzzyppo {

struct ParamId {
  std::size_t index = 0;
  bool operator==(const ParamId&) const = default;
};

// One named parameter tensor with its gradient and Adam moments. All four
// arrays always have shape_size(shape) elements.
struct ParamEntry {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;
  std::vector<double> adam_m;
  std::vector<double> adam_v;

  std::size_t size() const { return value.size(); }
};

std::size_t shape_size(std::span<const std::size_t> shape);

class ParamStore {
 public:
  // Registers a zero-initialized tensor. Names must be unique.
  ParamId add(std::string name, std::vector<std::size_t> shape);

  ParamEntry& operator[](ParamId id) { return entries_.at(id.index); }
  const ParamEntry& operator[](ParamId id) const { return entries_.at(id.index); }

  std::optional<ParamId> find(const std::string& name) const;

  std::span<ParamEntry> entries() { return entries_; }
  std::span<const ParamEntry> entries() const { return entries_; }
  std::size_t num_entries() const { return entries_.size(); }
  std::size_t total_size() const;

  void zero_grads();

  // Number of optimizer steps applied so far.
  std::uint64_t step_count = 0;

 private:
  std::vector<ParamEntry> entries_;
};

}  // namespace fuzzyppo
