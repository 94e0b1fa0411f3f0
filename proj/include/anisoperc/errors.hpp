#pragma once

#include <stdexcept>
#include <string>

namespace anisoperc {

// Categories map one-to-one onto CLI exit codes.
enum class ErrorKind {
    config = 2,
    capacity = 3,
    no_crossing = 4,
    invalid_regime = 5,
    domain = 6,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class CapacityError : public Error {
public:
    explicit CapacityError(const std::string& what) : Error(ErrorKind::capacity, what) {}
};

class NoCrossingError : public Error {
public:
    explicit NoCrossingError(const std::string& what) : Error(ErrorKind::no_crossing, what) {}
};

class InvalidRegimeError : public Error {
public:
    explicit InvalidRegimeError(const std::string& what) : Error(ErrorKind::invalid_regime, what) {}
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

}  // namespace anisoperc
