#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shotlocker {

enum class ErrorCode {
  parse,
  empty_collection,
  io,
  invalid_argument,
  dimension_mismatch,
  degenerate_vector,
  empty_input,
  insufficient_data,
  insufficient_candidates,
  insufficient_window,
  unresolved_id,
  leakage,
  missing_mapping,
  transport,
  cassette_miss,
  fingerprint_mismatch,
  run_aborted,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace shotlocker
