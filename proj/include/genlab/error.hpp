#pragma once

#include <stdexcept>
#include <string>

namespace genlab {

// Base of every exception the library throws. Subclasses name the failure
// category so callers (and the CLI) can react without parsing messages.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// Shapes or widths that do not line up.
class DimensionError : public Error {
   public:
    using Error::Error;
};

// Invalid knobs: unknown activation, negative lambda, zero batch size.
class ConfigError : public Error {
   public:
    using Error::Error;
};

// Mathematically undefined input, e.g. reducing an empty tensor.
class DomainError : public Error {
   public:
    using Error::Error;
};

// Caller broke an API precondition (non-scalar loss, missing gradient).
class ContractError : public Error {
   public:
    using Error::Error;
};

// NaN or Inf produced or consumed.
class NumericError : public Error {
   public:
    using Error::Error;
};

// Malformed values in otherwise well-formed input (pixels out of range, bad labels).
class DataError : public Error {
   public:
    using Error::Error;
};

// Bytes on disk do not follow the expected container layout.
class FormatError : public Error {
   public:
    using Error::Error;
};

class VersionError : public FormatError {
   public:
    using FormatError::FormatError;
};

class IoError : public Error {
   public:
    using Error::Error;
};

}  // namespace genlab
