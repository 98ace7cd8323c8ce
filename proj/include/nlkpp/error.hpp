#pragma once

#include <stdexcept>
#include <string>

namespace nlkpp {

/// Failure categories shared by the C++ core and the C API.
enum class ErrorCode {
  invalid_argument,
  assumption_failed,
  no_wave,
  c_zero_unsupported,
  iteration_stalled,
  tail_underresolved,
  front_left_domain,
  parse_error,
  internal,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::invalid_argument, what);
}

}  // namespace nlkpp
