#pragma once

#include <stdexcept>
#include <string>

namespace sculptor {

// Exit-code classes shared by the library and the CLI:
//   1 usage error, 2 input/validation error, 3 external-service error.
enum class ErrorKind : int {
  usage = 1,
  validation = 2,
  service = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

struct UsageError : Error {
  explicit UsageError(std::string message) : Error(ErrorKind::usage, std::move(message)) {}
};

struct ValidationError : Error {
  explicit ValidationError(std::string message) : Error(ErrorKind::validation, std::move(message)) {}
};

struct ServiceError : Error {
  explicit ServiceError(std::string message) : Error(ErrorKind::service, std::move(message)) {}
};

}  // namespace sculptor
