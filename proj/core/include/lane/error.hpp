#pragma once

#include <stdexcept>
#include <string>

namespace lane {

enum class ErrorKind {
  InvalidArgument,
  ShapeMismatch,
  Integrity,   // corrupt indices, violated rasterizer contract, ...
  BadMagic,
  Truncated,
  UnknownName,
  MissingSlot,
  Io,
};

const char* to_string(ErrorKind kind);

/// Library-wide exception. `kind()` lets callers (the CLI in particular)
/// map failures onto exit codes without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace lane
