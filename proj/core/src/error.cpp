#include "civgraph/error.hpp"

namespace civgraph {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::format: return "format";
    case ErrorKind::bad_magic: return "bad_magic";
    case ErrorKind::truncated: return "truncated";
    case ErrorKind::size_overflow: return "size_overflow";
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::shape_mismatch: return "shape_mismatch";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::internal: return "internal";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

FormatError::FormatError(std::string file, std::size_t line, std::string column, const std::string& what)
    : Error(ErrorKind::format,
            file + ":" + std::to_string(line) + ": column '" + column + "': " + what),
      file_(std::move(file)),
      line_(line),
      column_(std::move(column)) {}

}  // namespace civgraph
