#pragma once

#include <stdexcept>
#include <string>

namespace dpe {

// Query outside the domain of a function (e.g. before the start of a step function).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// An operation was called with arguments violating its documented precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input file could not be parsed. The message carries line/field context.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parsed input violates a declared invariant. The message names the invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The simulation had to abort (stranded flow, label non-convergence, ...).
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dpe
