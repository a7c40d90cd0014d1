#pragma once

#include <stdexcept>
#include <string>

namespace nvm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A truncated Fock space is too small for the requested state or operator.
class TruncationError : public Error {
public:
    using Error::Error;
};

/// Density matrix invariants (Hermiticity, trace, positivity) are violated.
class InvalidDensity : public Error {
public:
    using Error::Error;
};

class QuadratureError : public Error {
public:
    using Error::Error;
};

/// Trace or Hermiticity drift during time stepping.
class EvolutionError : public Error {
public:
    using Error::Error;
};

/// A precomputation would exceed its memory budget.
class BudgetError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Wraps an error with the name of the pipeline stage that raised it.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

} // namespace nvm
