#pragma once

#include <stdexcept>
#include <string>

namespace ompn {

/// Input data violates a documented invariant (bad field value, malformed
/// file, inconsistent dimensions...).  Messages name the offending field.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A requested computation exceeds a configured work cap (subset or
/// enumeration limits).  The message states the cap and the requested size.
class CapacityError : public std::runtime_error {
 public:
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem-level failure: missing file, unreadable path, write error.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ompn
