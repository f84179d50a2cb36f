#pragma once

#include <stdexcept>
#include <string>

namespace covsync {

// Error taxonomy; the CLI maps these onto exit codes
// (1 validation/format, 2 numeric, 3 usage).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParameterError : Error { using Error::Error; };   // bad argument value
struct SizeError : Error { using Error::Error; };        // dimension constraint violated
struct RangeError : Error { using Error::Error; };       // value overflow
struct FormatError : Error { using Error::Error; };      // malformed file / stream
struct StateError : Error { using Error::Error; };       // object misuse (e.g. dim mismatch)
struct ValidationError : Error { using Error::Error; };  // asset/content check failed
struct NumericError : Error { using Error::Error; };     // solver failure, degenerate data

}  // namespace covsync
