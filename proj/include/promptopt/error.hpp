#pragma once

#include <stdexcept>
#include <string>

namespace promptopt {

// Error taxonomy mirrored by the C API status codes.
enum class ErrorCode {
  invalid_argument,
  io,
  parse,
  backend,
  state,
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  static Error invalid_argument(const std::string& m) { return {ErrorCode::invalid_argument, m}; }
  static Error io(const std::string& m) { return {ErrorCode::io, m}; }
  static Error parse(const std::string& m) { return {ErrorCode::parse, m}; }
  static Error backend(const std::string& m) { return {ErrorCode::backend, m}; }
  static Error state(const std::string& m) { return {ErrorCode::state, m}; }
  static Error internal(const std::string& m) { return {ErrorCode::internal, m}; }

 private:
  ErrorCode code_;
};

}  // namespace promptopt
