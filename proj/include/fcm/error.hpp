#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace fcm {

enum class ErrorCode {
  invalid_argument,
  degenerate_domain,
  grid_mismatch,
  domain,
  shape,
  near_singular,
  parse,
  io,
};

const char* to_string(ErrorCode code);

/// Base for every error raised by the library. The code selects the CLI exit
/// status and the "error" field of the JSON emitted on standard error.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when a symmetric system is too close to singular to factor. Its
/// presence usually means the design does not identify the coefficients.
class NearSingular : public Error {
 public:
  NearSingular(double min_eigenvalue, double max_eigenvalue);

  double min_eigenvalue() const noexcept { return min_eig_; }
  double max_eigenvalue() const noexcept { return max_eig_; }

 private:
  double min_eig_;
  double max_eig_;
};

/// Malformed input file. Carries the source path and, when known, the 1-based
/// line and the offending field.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::optional<std::size_t> line,
             std::string field, const std::string& message);

  const std::string& source() const noexcept { return source_; }
  std::optional<std::size_t> line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::string source_;
  std::optional<std::size_t> line_;
  std::string field_;
};

}  // namespace fcm
