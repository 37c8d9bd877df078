#include "fcm/error.hpp"

#include <sstream>

namespace fcm {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::degenerate_domain: return "degenerate_domain";
    case ErrorCode::grid_mismatch: return "grid_mismatch";
    case ErrorCode::domain: return "domain";
    case ErrorCode::shape: return "shape";
    case ErrorCode::near_singular: return "near_singular";
    case ErrorCode::parse: return "parse";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

namespace {

std::string near_singular_message(double lo, double hi) {
  std::ostringstream os;
  os.precision(6);
  os << "system is near singular: min eigenvalue " << lo << ", max eigenvalue " << hi
     << " (coefficients may not be identified by this design)";
  return os.str();
}

std::string parse_message(const std::string& source, std::optional<std::size_t> line,
                          const std::string& field, const std::string& message) {
  std::ostringstream os;
  os << source;
  if (line) os << ":" << *line;
  if (!field.empty()) os << " [" << field << "]";
  os << ": " << message;
  return os.str();
}

}  // namespace

NearSingular::NearSingular(double min_eigenvalue, double max_eigenvalue)
    : Error(ErrorCode::near_singular, near_singular_message(min_eigenvalue, max_eigenvalue)),
      min_eig_(min_eigenvalue),
      max_eig_(max_eigenvalue) {}

ParseError::ParseError(std::string source, std::optional<std::size_t> line,
                       std::string field, const std::string& message)
    : Error(ErrorCode::parse, parse_message(source, line, field, message)),
      source_(std::move(source)),
      line_(line),
      field_(std::move(field)) {}

}  // namespace fcm
