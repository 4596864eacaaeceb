#pragma once

#include <stdexcept>
#include <string>

namespace l4span {

/// A feedback or sequence-number stream broke its monotonicity contract.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Argument outside the mathematical domain of a formula (e.g. beta >= 1).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class InvalidOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Scenario or CLI configuration problem. `field()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace l4span
