#pragma once

#include <stdexcept>
#include <string>

namespace posekit {

// Base class for all domain errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Raised when an OKS-style mean has no visible ground-truth keypoints to
// average over (the denominator of the similarity would be zero).
class NoVisibleKeypoints : public Error {
 public:
  using Error::Error;
};

class DegenerateScale : public Error {
 public:
  using Error::Error;
};

class NonFinite : public Error {
 public:
  using Error::Error;
};

class NoCandidates : public Error {
 public:
  using Error::Error;
};

class InsufficientCandidates : public Error {
 public:
  using Error::Error;
};

class NonInjectiveSelection : public Error {
 public:
  using Error::Error;
};

class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

// Constructor/precondition violations that do not fit a more specific type.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace posekit
