#pragma once

#include <stdexcept>
#include <string>

namespace nlmg {

/// Invalid (n, alpha) or other out-of-range numeric parameter.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Geometric or structural precondition violated by an input.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Tail error budget cannot be met; carries the far radius that would be needed.
class BudgetError : public std::runtime_error {
 public:
  BudgetError(const std::string& what, double required_far_radius)
      : std::runtime_error(what), required_far_radius_(required_far_radius) {}
  double required_far_radius() const noexcept { return required_far_radius_; }

 private:
  double required_far_radius_;
};

class StepFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file or option document. `key` names the offending entry when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::string key = {})
      : std::runtime_error(what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace nlmg
