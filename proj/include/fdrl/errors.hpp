#pragma once

#include <stdexcept>
#include <string>

namespace fdrl {

// Violated precondition: dimension mismatch, empty batch, bad sizes.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Replay memory cannot serve the request yet.
class NotReadyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Action radius too small to extract an angle.
class DegenerateActionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Prefill could not find a feasible example within its attempt budget.
class EnvironmentTooSparseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fdrl
