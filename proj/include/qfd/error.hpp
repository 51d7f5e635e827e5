#pragma once

#include <stdexcept>
#include <string>

namespace qfd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument or state violates an operation's precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Two fields that must share a grid do not.
class GridMismatch : public Error {
public:
    using Error::Error;
};

/// Non-finite values or breakdown of a numerical scheme.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// File could not be read or written, or has a malformed layout.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace qfd
