#pragma once

#include <stdexcept>
#include <string>

namespace smoothfbo {

// Base class for every error this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dimension or shape mismatch between operands.
struct ShapeError : Error {
  using Error::Error;
};

// A numeric quantity that must stay finite became inf/nan.
struct NonFiniteError : Error {
  using Error::Error;
};

// Invalid or unsolvable linear system (singular to working precision).
struct SingularError : Error {
  using Error::Error;
};

// Configuration file problems carry the offending line and key.
struct ConfigError : Error {
  ConfigError(const std::string& message, int line_number, std::string key_name)
      : Error(message), line(line_number), key(std::move(key_name)) {}
  int line;
  std::string key;
};

}  // namespace smoothfbo
