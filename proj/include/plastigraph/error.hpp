#pragma once

#include <stdexcept>
#include <string>

namespace plastigraph {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite value produced by a primitive or a diverging loss.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent topology or tape/parameter bookkeeping.
class StructuralError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent training data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Missing or mismatched on-disk artifact.
class ArtifactError : public Error {
 public:
  using Error::Error;
};

}  // namespace plastigraph
