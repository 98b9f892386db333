#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gem {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: bad hyperparameters, unknown keys, missing files.
/// The CLI maps these to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Malformed record in a dataset or container file.
class FormatError : public ConfigError {
 public:
  FormatError(const std::string& what, std::size_t line = 0)
      : ConfigError(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// A class with no examples was asked for its second moment.
class EmptyClassError : public Error {
 public:
  EmptyClassError(std::size_t label)
      : Error("class " + std::to_string(label + 1) + " has no examples"), label_(label) {}
  std::size_t label() const { return label_; }

 private:
  std::size_t label_;
};

/// The denominator matrix of a generalized eigenproblem is not positive definite.
/// Increasing gamma fixes it.
class CholeskyError : public Error {
 public:
  using Error::Error;
};

/// Every generalized eigenvalue fell below the selection threshold.
class EmptyBankError : public Error {
 public:
  using Error::Error;
};

}  // namespace gem
