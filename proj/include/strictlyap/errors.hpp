#pragma once

#include <stdexcept>
#include <string>

namespace strictlyap {

// Root of every error thrown by the library. CLI exit codes are derived from
// the concrete type (see cli/commands.hpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed grids, non-finite samples, inconsistent sizes.
class StructuralError : public Error {
public:
    using Error::Error;
};

// A function does not belong to the comparison class an operation requires.
class ClassError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public Error {
public:
    using Error::Error;
};

// A signal or field was queried outside the set where it is defined.
class DomainError : public Error {
public:
    using Error::Error;
};

// Invalid user configuration (schema violations, coarse quadrature, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

class ParameterError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// A signal failed its persistency-of-excitation check.
class PEError : public Error {
public:
    using Error::Error;
};

class BlowupError : public Error {
public:
    BlowupError(const std::string& what, double last_good_time)
        : Error(what), last_good_time_(last_good_time) {}
    double last_good_time() const { return last_good_time_; }

private:
    double last_good_time_;
};

class ZenoError : public Error {
public:
    using Error::Error;
};

// A construction step produced a gain outside its required class.
class ConstructionError : public Error {
public:
    ConstructionError(const std::string& step, const std::string& what)
        : Error(step + ": " + what), step_(step) {}
    const std::string& step() const { return step_; }

private:
    std::string step_;
};

}  // namespace strictlyap
