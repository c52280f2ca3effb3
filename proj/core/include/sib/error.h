#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sib {

enum class Errc {
  InvalidSpec,
  InvalidFactor,
  SizeMismatch,
  DuplicateDroneId,
  Unresolvable,
  SyntaxError,
  SchemaError,
  InvalidName,
  StorageFailure,
  NotFound,
  AlreadyRunning,
  NotRunning,
  NotPrompting,
  InvalidCount,
  UnknownDrone,
  NotAirborne,
  InvalidArgument,
  BindFailure,
};

std::string_view to_string(Errc code);

// Single exception type for every recoverable failure; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace sib
