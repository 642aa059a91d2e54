#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace shotlocker {

/// Deterministic generator for one (seed, stream) pair. Output depends only
/// on the standard-specified mt19937_64 and seed_seq, so draws are identical
/// across standard library implementations.
class SeededDraw {
 public:
  SeededDraw(std::uint64_t seed, std::uint64_t stream);

  /// Uniform integer in [0, bound), bound > 0, by rejection.
  std::uint64_t below(std::uint64_t bound);

  /// Picks `count` distinct positions from [0, n) uniformly (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace shotlocker
