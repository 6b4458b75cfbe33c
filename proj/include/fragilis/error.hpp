#pragma once

#include <stdexcept>
#include <string>

namespace fragilis {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Arguments outside an operation's domain (r <= -1, empty sample, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed input data; carries row/field context in the message.
class ParseError : public Error {
 public:
  ParseError(std::string message, std::size_t row = 0, std::string field = {})
      : Error(format(message, row, field)), row_(row), field_(std::move(field)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string format(const std::string& message, std::size_t row,
                            const std::string& field) {
    std::string out;
    if (row > 0) out += "row " + std::to_string(row) + ": ";
    if (!field.empty()) out += "field '" + field + "': ";
    return out + message;
  }

  std::size_t row_;
  std::string field_;
};

// A well-formed request that cannot be computed (infeasible calibration,
// degenerate variance, missing bandwidth).
class ComputationError : public Error {
 public:
  using Error::Error;
};

}  // namespace fragilis
