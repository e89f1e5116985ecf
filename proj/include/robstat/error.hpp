#pragma once

#include <stdexcept>
#include <string>

namespace robstat {

enum class ErrorKind {
  invalid_argument,  // precondition or malformed input
  unsupported,       // valid inputs that form an unsupported combination
  numeric,           // solver or numerical failure
  config,            // configuration parse failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::invalid_argument, what);
}

}  // namespace robstat
