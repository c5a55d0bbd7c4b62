#pragma once

#include <stdexcept>
#include <string>

namespace vblc {

// Bad arguments, malformed config values, contract violations.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failures while reading or writing files.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace vblc
