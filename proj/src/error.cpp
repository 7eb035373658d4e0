#include "entkit/error.hpp"

namespace entkit {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse: return "parse";
    case ErrorKind::duplicate_id: return "duplicate-id";
    case ErrorKind::dangling_reference: return "dangling-reference";
    case ErrorKind::hierarchy_cycle: return "hierarchy-cycle";
    case ErrorKind::invariant: return "invariant";
    case ErrorKind::config: return "config";
    case ErrorKind::missing_input: return "missing-input";
    case ErrorKind::empty_result: return "empty-result";
    case ErrorKind::internal: return "internal";
  }
  return "unknown";
}

void fail_at(ErrorKind kind, const std::string& path, size_t line,
             const std::string& message) {
  throw Error(kind, path + ":" + std::to_string(line) + ": " + message);
}

}  // namespace entkit
