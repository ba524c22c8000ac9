#pragma once

#include <stdexcept>
#include <string>

namespace vecflow {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed binary input (vecs files, index container).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Malformed text input (label files, label expressions).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Invalid argument values or shape mismatches.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Unknown label, point id or partition membership.
class LookupError : public Error {
 public:
  using Error::Error;
};

// Index construction failed (bad posting list entries etc).
class BuildError : public Error {
 public:
  using Error::Error;
};

// Executor used outside its lifecycle (submit after shutdown, double await).
class LifecycleError : public Error {
 public:
  using Error::Error;
};

// Job dropped by a non-draining shutdown.
class CancelledError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace vecflow
