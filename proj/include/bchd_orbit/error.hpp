#pragma once

#include <stdexcept>
#include <string>

namespace bchd_orbit {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand sizes do not agree (vector lengths, matrix shapes, generator counts).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A field or function produced a non-finite value, or was evaluated outside its domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Requested order / method combination is not available.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// Malformed input (config files, bracket words, schedules).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

} // namespace bchd_orbit
