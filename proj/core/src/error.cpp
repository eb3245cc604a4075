#include "caplab/error.hpp"

#include <sstream>

namespace caplab {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_input:
      return "invalid-input";
    case ErrorKind::numerical_failure:
      return "numerical-failure";
    case ErrorKind::capacity_exceeded:
      return "capacity-exceeded";
    case ErrorKind::budget_too_small:
      return "budget-too-small";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

namespace {
std::string budget_message(double requested, double minimal) {
  std::ostringstream os;
  os.precision(17);
  os << "Lipschitz budget " << requested << " is below the minimal feasible slope " << minimal;
  return os.str();
}
}  // namespace

BudgetTooSmall::BudgetTooSmall(double requested, double minimal_feasible)
    : Error(ErrorKind::budget_too_small, budget_message(requested, minimal_feasible)),
      requested_(requested),
      minimal_(minimal_feasible) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace caplab
