#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctxd {

enum class ErrorCode {
  invalid_argument,
  not_found,
  conflict,
  parse_error,
  backend_error,
  io_error,
  internal,
};

std::string_view to_string(ErrorCode code);

/// Every failure surfaced by the engine. The code decides how the service
/// layer reports it (HTTP status, CLI exit code).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace ctxd
