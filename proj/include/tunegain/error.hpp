#pragma once

#include <stdexcept>
#include <string>

namespace tunegain {

/// Raised for invalid input data or violated preconditions.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a ratio metric has no defined value (e.g. all gains are zero).
class UndefinedMetric : public Error {
 public:
  explicit UndefinedMetric(const std::string& what) : Error(what) {}
};

}  // namespace tunegain
