#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace shotlocker {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

/// 64-bit FNV-1a; chain calls by passing the previous result as `state`.
constexpr std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = kFnvOffset) {
  for (char c : bytes) {
    state ^= static_cast<unsigned char>(c);
    state *= 0x100000001b3ULL;
  }
  return state;
}

std::string hex64(std::uint64_t value);

}  // namespace shotlocker
