#pragma once

#include <stdexcept>
#include <string>

namespace sturm {

// Violated precondition on an operation's inputs (bad grid, dt <= 0, ...).
class PreconditionError : public std::invalid_argument {
public:
    explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

// Scenario configuration could not be ingested. Maps to CLI exit status 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// The discretization failed to reproduce a property the continuous problem
// guarantees (zero-number increase, dt underflow, ...). Maps to exit status 3.
class FidelityError : public std::runtime_error {
public:
    explicit FidelityError(const std::string& what) : std::runtime_error(what) {}
};

// Theorem hypotheses are not met (non-hyperbolic equilibrium, non-generic
// boundary ordering).
class HypothesisError : public std::runtime_error {
public:
    explicit HypothesisError(const std::string& what) : std::runtime_error(what) {}
};

// A point at infinity has no finite representative.
class AtInfinityError : public std::domain_error {
public:
    explicit AtInfinityError(const std::string& what) : std::domain_error(what) {}
};

}  // namespace sturm
