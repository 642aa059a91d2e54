#include "shotlocker/error.hpp"

namespace shotlocker {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse: return "parse";
    case ErrorCode::empty_collection: return "empty_collection";
    case ErrorCode::io: return "io";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::degenerate_vector: return "degenerate_vector";
    case ErrorCode::empty_input: return "empty_input";
    case ErrorCode::insufficient_data: return "insufficient_data";
    case ErrorCode::insufficient_candidates: return "insufficient_candidates";
    case ErrorCode::insufficient_window: return "insufficient_window";
    case ErrorCode::unresolved_id: return "unresolved_id";
    case ErrorCode::leakage: return "leakage";
    case ErrorCode::missing_mapping: return "missing_mapping";
    case ErrorCode::transport: return "transport";
    case ErrorCode::cassette_miss: return "cassette_miss";
    case ErrorCode::fingerprint_mismatch: return "fingerprint_mismatch";
    case ErrorCode::run_aborted: return "run_aborted";
  }
  return "unknown";
}

}  // namespace shotlocker
