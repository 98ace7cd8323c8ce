#include "nlkpp/error.hpp"

namespace nlkpp {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::assumption_failed: return "assumption-failed";
    case ErrorCode::no_wave: return "no-wave";
    case ErrorCode::c_zero_unsupported: return "c-zero-unsupported";
    case ErrorCode::iteration_stalled: return "iteration-stalled";
    case ErrorCode::tail_underresolved: return "tail-underresolved";
    case ErrorCode::front_left_domain: return "front-left-domain";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

}  // namespace nlkpp
