#pragma once

#include <stdexcept>
#include <string>

namespace abyss {

/// Bad argument to a pure operation (negative radius, short trace, ...).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Inconsistent configuration: unknown profile, too few members, missing generator entry.
class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SchedulingError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class PlanningError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fleet assignment violates the comms-range constraint. Carries the offending pair.
class AssignmentError : public std::runtime_error {
public:
    AssignmentError(std::string first, std::string second, double separation, double range)
        : std::runtime_error("AUVs " + first + " and " + second + " would be " +
                             std::to_string(separation) + " m apart, exceeding comms range " +
                             std::to_string(range) + " m"),
          first_(std::move(first)),
          second_(std::move(second)),
          separation_(separation) {}

    const std::string& first() const noexcept { return first_; }
    const std::string& second() const noexcept { return second_; }
    double separation() const noexcept { return separation_; }

private:
    std::string first_;
    std::string second_;
    double separation_;
};

/// A handler failed during event dispatch; the run was aborted.
class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scenario or request document failed schema validation.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rates requested on a session with zero frames.
class UndefinedRateError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

}  // namespace abyss
