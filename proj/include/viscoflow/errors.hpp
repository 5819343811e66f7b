#pragma once

#include <stdexcept>
#include <string>

namespace viscoflow {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input: size mismatch, malformed config, out-of-range index.
class InputError : public Error {
public:
    using Error::Error;
};

// Physical constants that violate a module invariant (e.g. ellipticity).
class ConfigurationError : public Error {
public:
    using Error::Error;
};

// State has left the small-data regime (|rho| > 1/2).
class StabilityError : public Error {
public:
    using Error::Error;
};

class StepSizeError : public Error {
public:
    using Error::Error;
};

class InvariantViolation : public Error {
public:
    using Error::Error;
};

class DivergenceError : public Error {
public:
    using Error::Error;
};

class DiagnosticError : public Error {
public:
    using Error::Error;
};

}  // namespace viscoflow
