#pragma once

#include <stdexcept>
#include <string>

namespace cp3 {

// Base class for everything this library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or out-of-contract arguments (non-finite values, shape mismatch).
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

// Not enough frames to estimate temporal statistics.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// A pixel cannot be given k_supports distinct supporting candidates.
class InsufficientCandidatesError : public Error {
 public:
  using Error::Error;
};

// Unreadable or unsupported image data.
class DecodeError : public Error {
 public:
  using Error::Error;
};

// A frame index is missing inside the requested range.
class SequenceGapError : public Error {
 public:
  using Error::Error;
};

// Bad magic, unsupported version, or truncated model data.
class IncompatibleModelError : public Error {
 public:
  using Error::Error;
};

// metrics() called on all-zero counters.
class EmptyEvaluationError : public Error {
 public:
  using Error::Error;
};

// Filesystem failure carrying the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidInputError(what);
}

}  // namespace cp3
