#pragma once

#include <stdexcept>
#include <string>

namespace deeptrust {

/// Bad input, bad configuration, or a violated precondition. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file could not be opened, read, or written. Maps to CLI exit code 2.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File content does not match the expected format (corrupt model, malformed line).
class FormatError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Training diverged or a classifier could not be fitted.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace deeptrust
