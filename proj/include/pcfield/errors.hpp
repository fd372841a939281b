#pragma once

#include <stdexcept>
#include <string>

namespace pcf {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a precondition: malformed input, value outside a domain,
/// an unsupported configuration. The CLI maps these to exit code 2.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Exact integer arithmetic left the range of std::int64_t.
class OverflowError : public ContractError {
 public:
  using ContractError::ContractError;
};

/// A frequency was required to lie in the annihilator and does not.
class DomainError : public ContractError {
 public:
  using ContractError::ContractError;
};

/// A question the inputs cannot answer (e.g. an infinite sum with no decay
/// information).
class UndecidableError : public ContractError {
 public:
  using ContractError::ContractError;
};

/// A numerical check failed beyond its tolerance. Exit code 3 in the CLI.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double violation)
      : Error(what), violation_(violation) {}

  double violation() const { return violation_; }

 private:
  double violation_;
};

}  // namespace pcf
