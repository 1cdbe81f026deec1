#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace liftkit {

enum class ErrorCode {
  kInvalidArgument,
  kNoData,
  kDegenerateRotation,
  kDegenerateGeometry,
  kEmptyCluster,
  kFormat,
  kIo,
  kConfig,
};

std::string_view to_string(ErrorCode code);

// Every recoverable failure in the library is reported as an Error carrying
// a machine-readable code; the CLI maps codes onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace liftkit
