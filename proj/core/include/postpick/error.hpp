#pragma once

#include <stdexcept>
#include <string>

namespace postpick {

/// Unreadable or malformed file contents.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Image dimensions unsuitable for the requested operation.
class SizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Payload inconsistent with its header, or non-finite samples.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated an operation's precondition.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace postpick
