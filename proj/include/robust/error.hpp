#pragma once

#include <stdexcept>
#include <string>

namespace robust {

// Failure categories map one-to-one onto CLI exit codes (2, 3, 4).
enum class ErrorKind {
  input,          // bad arguments, malformed data, out-of-range parameters
  degenerate,     // zero scale, singular scatter, exact fit
  non_convergence
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

class DegenerateError : public Error {
 public:
  explicit DegenerateError(const std::string& what)
      : Error(ErrorKind::degenerate, what) {}
};

class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& what)
      : Error(ErrorKind::non_convergence, what) {}
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InputError(what);
}

}  // namespace robust
