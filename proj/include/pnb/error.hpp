#pragma once

#include <stdexcept>
#include <string>

namespace pnb {

/// Raised for invalid data, violated preconditions and file problems.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Raised for bad user-facing requests (unknown criterion names, malformed
/// structure strings). The CLI maps it to the usage exit code.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(what) {}
};

}  // namespace pnb
