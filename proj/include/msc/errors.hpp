#pragma once

#include <stdexcept>
#include <string>

namespace msc {

// Base class for all library errors.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid arguments: shape mismatches, empty inputs, bad configuration values.
class argument_error : public error {
 public:
  explicit argument_error(const std::string& msg) : error(msg) {}
};

// On-disk data problems: bad magic, truncation, unparsable values.
class format_error : public error {
 public:
  explicit format_error(const std::string& msg) : error(msg) {}
};

// Numerical failures: singular systems, non-convergence.
class numeric_error : public error {
 public:
  explicit numeric_error(const std::string& msg) : error(msg) {}
};

}  // namespace msc
