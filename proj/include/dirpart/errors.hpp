#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dirpart {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two fields (or a field and an operator) live on different grids.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A caller-supplied argument violates a precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Unknown shape name or degenerate shape parameters.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed run configuration. Carries the offending line (0 when unknown).
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, std::size_t line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace dirpart
