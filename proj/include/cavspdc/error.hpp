#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cavspdc {

enum class ErrorKind {
  argument,           // precondition on a numeric argument
  range,              // outside a model's validity range
  invariant,          // a domain invariant would be broken
  lookup,             // unknown label / name
  root_not_bracketed,
  resolution,         // grid too coarse for the requested operation
  shape,              // trace shape does not support the measurement
  undefined_snr,
  no_detuning,        // zero differential thermo-optic slope
  config,
  convergence,
  io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace cavspdc
