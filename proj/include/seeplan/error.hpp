#pragma once

#include <stdexcept>
#include <string>

namespace seeplan {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Physically meaningless or inconsistent system parameters.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Configuration that parses but breaks an invariant (e.g. non-integer energy map).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// An action that consumes more energy than the battery holds.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Tables built over different state/action spaces.
class ShapeError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

/// A policy has no usable action for a visited (stage, state).
class CoverageError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace seeplan
