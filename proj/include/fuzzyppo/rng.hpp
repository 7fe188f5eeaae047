#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace fuzzyppo {

// Seedable random stream. Every consumer in a run owns its own Rng so that
// drawing from one (e.g. evaluation) never shifts another (training).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Stream keyed by an arbitrary tuple, e.g. (run seed, tag, update, episode).
  static Rng derive(std::initializer_list<std::uint64_t> key);

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  std::uint64_t next_u64() { return engine_(); }

  // Index drawn from a discrete distribution given by `probs`.
  int categorical(std::span<const double> probs);

  // In-place Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(engine_() % i);
      std::swap(items[i - 1], items[j]);
    }
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Stream tags used by the trainer.
enum class StreamTag : std::uint64_t {
  kInit = 1,
  kRollout = 2,
  kShuffle = 3,
  kEvaluation = 4,
};

}  // namespace fuzzyppo
