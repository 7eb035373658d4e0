#pragma once

#include <stdexcept>
#include <string>

namespace entkit {

enum class ErrorKind {
  parse,              // malformed record / unparseable file
  duplicate_id,       // id declared twice
  dangling_reference, // reference to an id that does not exist
  hierarchy_cycle,    // type parent relation is not a DAG
  invariant,          // a domain invariant was violated
  config,             // bad parameter or option combination
  missing_input,      // file or resource not found / unreadable
  empty_result,       // an operation produced nothing where that is an error
  internal,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Formats "path:line: message" for loader diagnostics.
[[noreturn]] void fail_at(ErrorKind kind, const std::string& path, size_t line,
                          const std::string& message);

}  // namespace entkit
