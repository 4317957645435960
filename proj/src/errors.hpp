#pragma once

#include <stdexcept>
#include <string>

namespace cetm {

enum class ErrorCode {
  invalid_argument = 1,
  range,
  precondition,
  not_divergent,
  invalid_bracket,
  unreliable_verification,
  insufficient_data,
  degenerate_input,
  no_result,
  io,
  overflow,
  internal,
};

/// Library error carrying a coarse machine-readable code alongside the
/// human-readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace cetm
