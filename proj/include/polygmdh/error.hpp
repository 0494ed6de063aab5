#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace polygmdh {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: malformed files, invalid flags or configuration.
/// The CLI maps this family to exit code 2; all other errors exit with 3.
class InputError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

/// CSV structure problem (ragged row, missing column).
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t row)
      : InputError(what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

/// Label token outside the binary mapping.
class LabelError : public InputError {
 public:
  LabelError(const std::string& what, std::size_t row)
      : InputError(what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

/// Non-numeric or non-finite feature value.
class ValueError : public InputError {
 public:
  ValueError(const std::string& what, std::size_t row, std::size_t column)
      : InputError(what), row_(row), column_(column) {}
  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

/// Malformed model document (bad token, malformed number).
class ModelFormatError : public InputError {
 public:
  using InputError::InputError;
};

class VersionError : public ModelFormatError {
 public:
  using ModelFormatError::ModelFormatError;
};

/// Data that is well-formed but unusable (degenerate columns, too few rows).
class DataError : public Error {
 public:
  using Error::Error;
};

class MissingFeatureError : public DataError {
 public:
  explicit MissingFeatureError(const std::string& name)
      : DataError("missing feature '" + name + "'"), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

/// Network graph with unresolved or cyclic references.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Iterative fit produced a non-finite error value.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int step)
      : Error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

}  // namespace polygmdh
