#pragma once

#include <stdexcept>
#include <string>

namespace cprl {

// Malformed file contents: bad magic, truncated payload, unparsable field.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed input whose values violate a domain invariant (non-finite
// entries, out-of-range indices, missing group for a sample, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A solver produced a non-finite iterate or could not make progress.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cprl
