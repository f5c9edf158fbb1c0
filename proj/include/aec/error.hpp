#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aec {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input file does not follow its declared format (missing column, bad field).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Parse failure tied to a physical line of the input.
class ParseError : public FormatError {
public:
    ParseError(std::size_t line, const std::string& what)
        : FormatError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Well-formed input that violates a domain invariant (duplicate id, bad probs, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Inputs that cannot produce a meaningful result (single class, empty split).
class DegenerateError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

/// An id referenced by one input is missing from another.
class JoinError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

/// Bad run configuration or a missing input artifact. The CLI maps it to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace aec
