#include "shotlocker/random.hpp"

#include <limits>
#include <numeric>

#include "shotlocker/error.hpp"

namespace shotlocker {

SeededDraw::SeededDraw(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  engine_.seed(seq);
}

std::uint64_t SeededDraw::below(std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorCode::invalid_argument, "draw bound must be positive");
  // Reject the top partial bucket so every residue is equally likely.
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - (max % bound + 1) % bound;
  std::uint64_t x = engine_();
  while (x > limit) x = engine_();
  return x % bound;
}

std::vector<std::size_t> SeededDraw::sample_without_replacement(std::size_t n, std::size_t count) {
  if (count > n) throw Error(ErrorCode::invalid_argument, "cannot draw more items than available");
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

}  // namespace shotlocker
