#pragma once

#include <stdexcept>
#include <string>

namespace copf {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Linear system has no unique solution (disconnected network, degenerate matrix).
struct SingularSystem : Error {
  using Error::Error;
};

/// Carbon flow matrix turned out singular despite a passing feasibility check;
/// signals inconsistent power flow inputs.
struct SingularMatrix : Error {
  using Error::Error;
};

/// Solved nodal intensity fell outside its natural range; inputs are corrupted.
struct NegativeIntensity : Error {
  using Error::Error;
};

/// Both ends of a branch disagree on the flow direction beyond tolerance.
struct ImplausibleFlow : Error {
  using Error::Error;
};

struct NoConvergence : Error {
  NoConvergence(const std::string& what, int iterations_, double residual_)
      : Error(what), iterations(iterations_), residual(residual_) {}
  int iterations = 0;
  double residual = 0.0;
};

struct Infeasible : Error {
  Infeasible(const std::string& what, std::string kind_ = "infeasible")
      : Error(what), kind(std::move(kind_)) {}
  std::string kind;
};

/// Every direction pattern of the enumeration oracle was infeasible.
struct AllPatternsInfeasible : Error {
  using Error::Error;
};

struct EnergyBoundViolation : Error {
  using Error::Error;
};

struct SimultaneousChargeDischarge : Error {
  using Error::Error;
};

struct ParseError : Error {
  ParseError(const std::string& what, std::string field_ = {})
      : Error(what), field(std::move(field_)) {}
  std::string field;
};

struct SchemaError : Error {
  using Error::Error;
};

struct UnitError : Error {
  using Error::Error;
};

}  // namespace copf
