#pragma once

#include <stdexcept>
#include <string>

namespace supgcl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke a precondition: shape mismatch, bad index, empty input.
class ContractError : public Error {
public:
    using Error::Error;
};

/// A graph or dataset violates its structural invariants.
class ValidationError : public ContractError {
public:
    using ContractError::ContractError;
};

/// A computation produced or consumed a non-finite value.
class NumericError : public Error {
public:
    using Error::Error;
};

/// An input file could not be parsed; the message carries file/line/field context.
class ParseError : public Error {
public:
    using Error::Error;
};

/// A knockdown gene was requested for which no teacher GRN exists.
class MissingTeacherError : public ContractError {
public:
    using ContractError::ContractError;
};

/// A run configuration file is malformed or holds an invalid value.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A referenced input file does not exist.
class MissingInputError : public Error {
public:
    using Error::Error;
};

} // namespace supgcl
