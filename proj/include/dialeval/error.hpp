#pragma once

#include <stdexcept>
#include <string>

namespace dialeval {

/// Failure categories. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
  usage = 1,       // bad flags or configuration
  data = 2,        // malformed or inconsistent input data
  backend = 3,     // scorer or judge unavailable / protocol violation
  degenerate = 4,  // statistics undefined (no usable submetric, constant input)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

inline Error usage_error(const std::string& m) { return {ErrorKind::usage, m}; }
inline Error data_error(const std::string& m) { return {ErrorKind::data, m}; }
inline Error backend_error(const std::string& m) { return {ErrorKind::backend, m}; }
inline Error degenerate_error(const std::string& m) { return {ErrorKind::degenerate, m}; }

}  // namespace dialeval
