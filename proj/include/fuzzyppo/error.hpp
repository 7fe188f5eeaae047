#pragma once

#include <stdexcept>
#include <string>

namespace fuzzyppo {

// Precondition broken by the caller (bad shapes, stepping a finished episode).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A NaN or Inf showed up during a forward or backward pass.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace fuzzyppo
