#pragma once

#include <stdexcept>
#include <string>

namespace segeval {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file's bytes do not describe a valid volume (bad magic, truncated payload, bad codes).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Semantically invalid input: manifest rows, configuration, arguments out of range.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Operands disagree on dims or spacing.
class ShapeMismatch : public Error {
public:
    using Error::Error;
};

} // namespace segeval
