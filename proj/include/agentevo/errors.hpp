#pragma once
#include <stdexcept>
#include <string>

namespace agentevo {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid or out-of-range configuration value.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A documented precondition was violated by the caller.
class ContractError : public Error {
public:
    using Error::Error;
};

// Malformed input that could not be parsed; message carries the line number.
class ParseError : public Error {
public:
    using Error::Error;
};

// Structurally valid input missing a required field or with a bad field type.
class SchemaError : public Error {
public:
    using Error::Error;
};

class DuplicateError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Persisted file carries an unsupported schema version.
class VersionError : public Error {
public:
    using Error::Error;
};

// No eligible agent available for routing.
class RoutingError : public Error {
public:
    using Error::Error;
};

}  // namespace agentevo
