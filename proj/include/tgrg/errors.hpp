#pragma once

#include <stdexcept>
#include <string>

namespace tgrg {

// Invalid inputs or violated model contracts. CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A numerical routine exhausted its iteration budget or left its feasible
// range. Messages carry the offending node/link/time and the achieved
// residual. CLI maps this to exit code 2.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Unreadable, unparseable or inconsistent files. CLI maps this to exit code 3.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tgrg
