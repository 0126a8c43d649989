#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace buoyancy {

enum class ErrorCode {
  NonIncreasingCacheSizes,
  NonPositiveGeometry,
  InvalidSample,
  ZeroAllocation,
  NoMemoryTraffic,
  InvalidSlo,
  EmptyScoreSet,
  EmptyNode,
  NonPositiveInput,
  InvalidArgument,
  ParseError,
  SchemaError,
  CapacityExceeded,
  InsufficientData,
  ConfigError,
  BindError,
};

std::string_view to_string(ErrorCode code);

// Every recoverable failure in the library is reported through this type so
// callers can branch on code() instead of parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Parse failures carry the 1-based input line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(ErrorCode::ParseError,
              "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, std::string field, const std::string& message)
      : Error(ErrorCode::SchemaError, "line " + std::to_string(line) +
                                          ": field '" + field + "': " + message),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

}  // namespace buoyancy
