#pragma once

#include <stdexcept>
#include <string>

namespace pg {

// Base class for all toolkit errors. The subclass decides the CLI exit code:
// ConfigError -> 2, DataError -> 3, BackendError -> 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct DataError : Error {
  using Error::Error;
};

struct BackendError : Error {
  using Error::Error;
};

// --- dataset ---

struct MissingColumn : DataError {
  explicit MissingColumn(const std::string& name)
      : DataError("missing column: " + name) {}
};

struct UnknownLabel : DataError {
  UnknownLabel(const std::string& value, std::size_t row)
      : DataError("unknown label \"" + value + "\" at row " + std::to_string(row)) {}
  explicit UnknownLabel(const std::string& value)
      : DataError("unknown label \"" + value + "\"") {}
};

struct NonFiniteValue : DataError {
  NonFiniteValue(std::size_t row, const std::string& column)
      : DataError("non-finite value at row " + std::to_string(row) + ", column " + column) {}
};

struct InsufficientExamples : DataError {
  InsufficientExamples(const std::string& activity, std::size_t have, std::size_t need)
      : DataError("insufficient examples for activity " + activity + ": have " +
                  std::to_string(have) + ", need " + std::to_string(need)) {}
};

// --- attack ---

struct NoSimilarTarget : DataError {
  explicit NoSimilarTarget(const std::string& activity)
      : DataError("no similar target mapped for activity " + activity) {}
};

// --- llm backends ---

struct AuthMissing : BackendError {
  explicit AuthMissing(const std::string& env_var)
      : BackendError("credential environment variable " + env_var + " is not set") {}
};

struct BackendUnavailable : BackendError {
  using BackendError::BackendError;
};

struct ScriptMiss : BackendError {
  explicit ScriptMiss(const std::string& window_id)
      : BackendError("mock script has no entry for window " + window_id + " and no default") {}
};

struct UntrainedOracle : BackendError {
  UntrainedOracle() : BackendError("oracle backend has no trained model") {}
};

// --- metrics ---

struct EmptyRun : DataError {
  EmptyRun() : DataError("metrics requested over an empty run") {}
};

struct InconsistentLedger : DataError {
  using DataError::DataError;
};

// --- baseline ---

struct ClassTooSmall : DataError {
  ClassTooSmall(const std::string& activity, std::size_t have, std::size_t folds)
      : DataError("class " + activity + " has " + std::to_string(have) +
                  " members, fewer than " + std::to_string(folds) + " folds") {}
};

struct SchemaMismatch : DataError {
  using DataError::DataError;
};

}  // namespace pg
