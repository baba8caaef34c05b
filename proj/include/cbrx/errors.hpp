#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cbrx {

// One broken invariant, naming the attribute (may be empty for model-wide
// rules) and a short rule tag such as "missing-measure" or "range-violation".
struct Violation {
  std::string attribute;
  std::string rule;
  std::string message;

  bool operator==(const Violation&) const = default;
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Carries the violation list so callers (CLI, service) can report it as data.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::string what, std::vector<Violation> violations = {})
      : Error(std::move(what)), violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IngestionError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// Classification over an empty case base.
class NoPredictionError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace cbrx
