#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace caplab {

enum class ErrorKind {
  invalid_input,
  numerical_failure,
  capacity_exceeded,
  budget_too_small,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Base exception for every library failure. The kind mirrors the error
/// categories of the public operations so callers can branch without parsing
/// messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when a Lipschitz extension is requested with a slope below the
/// smallest feasible one; carries that smallest slope.
class BudgetTooSmall : public Error {
 public:
  BudgetTooSmall(double requested, double minimal_feasible);

  double requested() const noexcept { return requested_; }
  double minimal_feasible() const noexcept { return minimal_; }

 private:
  double requested_;
  double minimal_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::invalid_input, message);
}

}  // namespace caplab
