#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mqms {

/// Raised when a caller breaks a documented precondition (bad dimensions,
/// invalid allocation, empty index set, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Input value outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An enumeration would exceed its configured size guard.
class StateSpaceTooLarge : public std::runtime_error {
 public:
  StateSpaceTooLarge(const std::string& what, double requested, double limit)
      : std::runtime_error(what + ": state space too large (" + std::to_string(requested) +
                           " exceeds bound " + std::to_string(limit) + ")"),
        requested_(requested),
        limit_(limit) {}

  [[nodiscard]] double requested() const noexcept { return requested_; }
  [[nodiscard]] double limit() const noexcept { return limit_; }

 private:
  double requested_;
  double limit_;
};

/// Malformed configuration document or file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline void require(bool ok, const char* what) {
  if (!ok) throw ContractViolation(what);
}
inline void require(bool ok, const std::string& what) {
  if (!ok) throw ContractViolation(what);
}
}  // namespace detail

}  // namespace mqms
