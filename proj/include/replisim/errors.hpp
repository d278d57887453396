#pragma once

#include <stdexcept>
#include <string>

namespace replisim {

/// Bad parameters in a distribution, workload, server set or config file.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a function (negative time, null conditioning event).
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A policy asked the engine for something outside the admissible policy space.
class PolicyViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A trace or trajectory is internally inconsistent.
class IntegrityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two traces compared by a checker do not describe the same job set.
class JobSetMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace replisim
