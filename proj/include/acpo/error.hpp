#pragma once

#include <stdexcept>
#include <string>

namespace acpo {

// Errors split into two families so the CLI can map them onto exit codes:
// input/validation problems (exit 1) and runtime failures (exit 2).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : ValidationError(what), byte_offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

class SchemaError : public ValidationError {
 public:
  SchemaError(const std::string& field, const std::string& detail)
      : ValidationError("schema error: field \"" + field + "\" " + detail), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class SegmentationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class RuntimeFailure : public Error {
 public:
  using Error::Error;
};

class ContextOverflowError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

}  // namespace acpo
