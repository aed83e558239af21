#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace civgraph {

enum class ErrorKind {
  io,               // file missing or unreadable / unwritable
  format,           // malformed text input (TSV, JSON)
  bad_magic,        // binary file with the wrong magic bytes
  truncated,        // binary payload shorter than its header claims
  size_overflow,    // header dimensions overflow addressable size
  invalid_argument, // precondition violated by the caller
  shape_mismatch,   // matrix or vector dimensions disagree
  numeric,          // non-finite value or degenerate numeric input
  internal,         // broken invariant inside the library
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised for malformed text rows; carries the location.
class FormatError : public Error {
 public:
  FormatError(std::string file, std::size_t line, std::string column, const std::string& what);

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::string file_;
  std::size_t line_;
  std::string column_;
};

}  // namespace civgraph
