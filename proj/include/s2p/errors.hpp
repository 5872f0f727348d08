#pragma once

#include <stdexcept>
#include <string>

namespace s2p {

// Base class for all library errors. Subclasses map onto the failure
// categories surfaced by the CLI: configuration/usage problems exit with
// code 1, runtime failures with code 2.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input data: unparsable CSV cells, broken timestamps,
// non-hourly spacing, rejected rows.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Invalid user-supplied configuration: bad ratios, unknown keys,
// inconsistent paradigm settings, misuse of a command.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Tensor dimension mismatch detected at graph-build or call time.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Phase bookkeeping mismatch between windows and statistics.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

// Out-of-range numeric parameter (alpha outside [0,1], negative stds,
// degenerate series).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Network or cache retrieval failure.
class FetchError : public Error {
 public:
  using Error::Error;
};

// Checksum mismatch on cached data.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Training loss became non-finite.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace s2p
