#pragma once

#include <stdexcept>
#include <string>

namespace redraw {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument or malformed input data (maps to CLI exit code 1).
class ValidationError : public Error {
public:
    using Error::Error;
};

class ShapeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InvalidImage : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DegenerateStatistics : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DatasetError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Parse failure in a text or binary container; carries the offending line when known.
class FormatError : public ValidationError {
public:
    FormatError(const std::string& what, int line = 0)
        : ValidationError(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

/// Filesystem failures (maps to CLI exit code 2).
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace redraw
