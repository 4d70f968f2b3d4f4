#pragma once

#include <stdexcept>
#include <string>

namespace synthba {

/// Base of every error raised by the library. The CLI maps each family
/// onto a process exit code (see exit_code()).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 3; }
};

// Exit code 1: bad invocation or configuration.
class UsageError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 1; }
};

class ConfigError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 1; }
};

// Exit code 2: files that cannot be read, written or parsed.
class IoError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

class FormatError : public IoError {
public:
    using IoError::IoError;
};

class UnsupportedError : public IoError {
public:
    using IoError::IoError;
};

// Exit code 3: data that violates a domain contract.
class DomainError : public Error {
public:
    using Error::Error;
};

class CoverageError : public DomainError {
public:
    using DomainError::DomainError;
};

class UndefinedCorrelationError : public DomainError {
public:
    using DomainError::DomainError;
};

} // namespace synthba
