#pragma once

#include <stdexcept>
#include <string>

namespace shaken {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Band, momentum or genome index outside the solved/allocated range.
class IndexError : public Error {
 public:
  using Error::Error;
};

class EigenSolverError : public Error {
 public:
  using Error::Error;
};

// Relative phase requested between arms where one arm has no amplitude.
class PhaseUndefinedError : public Error {
 public:
  using Error::Error;
};

// Propagation aborted because the norm drifted beyond tolerance.
class PropagationError : public Error {
 public:
  using Error::Error;
};

}  // namespace shaken
