#pragma once

#include <stdexcept>
#include <string>

namespace cdce {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedFormat : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg, double residual = 0.0)
      : std::runtime_error(msg), residual(residual) {}
  double residual;
};

}  // namespace cdce
